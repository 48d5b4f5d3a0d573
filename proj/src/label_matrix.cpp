#include "trilabel/label_matrix.hpp"

#include <string>

#include "trilabel/error.hpp"

namespace trilabel {

namespace {

void check_vote(std::size_t r, std::size_t i, int v) {
  if (v < -1 || v > 1) {
    throw Error(ErrorCode::InvalidInput, "vote " + std::to_string(v) + " at row " +
                                             std::to_string(r + 1) + ", column " +
                                             std::to_string(i + 1) + " is not in {-1,0,+1}");
  }
}

}  // namespace

LabelMatrix::LabelMatrix(std::size_t rows, std::size_t sources, std::vector<Vote> votes)
    : rows_(rows), sources_(sources), votes_(std::move(votes)) {
  if (votes_.size() != rows_ * sources_) {
    throw Error(ErrorCode::ShapeMismatch, "label matrix expects " + std::to_string(rows_ * sources_) +
                                              " entries, got " + std::to_string(votes_.size()));
  }
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t i = 0; i < sources_; ++i) check_vote(r, i, votes_[r * sources_ + i]);
}

LabelMatrix::LabelMatrix(std::size_t rows, std::size_t sources)
    : rows_(rows), sources_(sources), votes_(rows * sources, 0) {}

void LabelMatrix::set(std::size_t r, std::size_t i, Vote v) {
  check_vote(r, i, v);
  votes_[r * sources_ + i] = v;
}

}  // namespace trilabel
