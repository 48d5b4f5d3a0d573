#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace trilabel {

using Vote = std::int8_t;

/// n x m matrix of source votes in {-1, 0, +1}; 0 means the source abstained.
/// Row-major. Entries are validated on construction.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t rows, std::size_t sources, std::vector<Vote> votes);
  LabelMatrix(std::size_t rows, std::size_t sources);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t sources() const noexcept { return sources_; }

  Vote operator()(std::size_t r, std::size_t i) const { return votes_[r * sources_ + i]; }
  void set(std::size_t r, std::size_t i, Vote v);

  std::span<const Vote> row(std::size_t r) const {
    return {votes_.data() + r * sources_, sources_};
  }
  const std::vector<Vote>& data() const noexcept { return votes_; }

  bool operator==(const LabelMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t sources_ = 0;
  std::vector<Vote> votes_;
};

// Position of a vote in the (+1, 0, -1) ordering used by every table.
inline int vote_code(int vote) { return vote == 1 ? 0 : (vote == 0 ? 1 : 2); }
inline int code_vote(int code) { return code == 0 ? 1 : (code == 1 ? 0 : -1); }

}  // namespace trilabel
