#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dcsjced/types.hpp"

namespace dcsjced {

struct DecodeResult {
  ArrayXr extrinsic;  // total posterior LLR minus input, per coded bit
  ArrayXr total;      // input + extrinsic
  ArrayXi hard_bits;  // argmax of total posterior
  bool converged = false;
  int iterations = 0;
};

// Regular (3,6) LDPC code with a seeded PEG-style construction and a
// systematic GF(2) encoder.  LLR convention: L = ln p(bit=0)/p(bit=1).
class LdpcCode {
 public:
  static LdpcCode build(int n_info, int n_code, uint64_t seed);

  int n_info() const { return n_info_; }
  int n_code() const { return n_code_; }
  int n_check() const { return n_code_ - n_info_; }

  ArrayXi encode(const ArrayXi& info_bits) const;
  DecodeResult decode_spa(const ArrayXr& channel_llr, int max_iters) const;
  bool syndrome_ok(const ArrayXi& bits) const;

  // positions of the info bits inside a codeword
  const std::vector<int>& info_positions() const { return info_pos_; }
  ArrayXi extract_info(const ArrayXi& codeword) const;

  // plain-text sparse listing, one "row col" pair per line
  void export_parity(std::ostream& os) const;
  static LdpcCode import_parity(std::istream& is, int n_info);

  const std::vector<std::vector<int>>& rows() const { return row_cols_; }

 private:
  void finalize();  // build encoder structure + edge arrays from row_cols_

  int n_info_ = 0;
  int n_code_ = 0;
  std::vector<std::vector<int>> row_cols_;  // per check row, sorted column ids
  std::vector<std::vector<int>> col_rows_;
  // systematic encoder: parity(r) = XOR of info bits listed in enc_terms_[r]
  std::vector<int> info_pos_;    // column ids of info bits (size n_info)
  std::vector<int> parity_pos_;  // column ids of parity bits (size n_check)
  std::vector<std::vector<int>> enc_terms_;
  // flat edge arrays for decoding
  std::vector<int> edge_row_, edge_col_;
  std::vector<std::vector<int>> row_edges_, col_edges_;
};

}  // namespace dcsjced
