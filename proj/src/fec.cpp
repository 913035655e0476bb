#include "dcsjced/fec.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "dcsjced/rng.hpp"

namespace dcsjced {

namespace {

// PEG edge placement: BFS from the column through the current graph, return
// rows at maximal distance (unreached rows first), tie-broken by degree.
int place_edge(int col, const std::vector<std::vector<int>>& col_rows,
               const std::vector<std::vector<int>>& row_cols, const std::vector<int>& row_deg,
               int m, RngStream& rng) {
  std::vector<int> dist(m, -1);
  std::queue<int> q;
  for (int r : col_rows[col]) {
    dist[r] = 0;
    q.push(r);
  }
  std::vector<char> colv(col_rows.size(), 0);
  colv[col] = 1;
  while (!q.empty()) {
    const int r = q.front();
    q.pop();
    for (int c : row_cols[r]) {
      if (colv[c]) continue;
      colv[c] = 1;
      for (int r2 : col_rows[c]) {
        if (dist[r2] < 0) {
          dist[r2] = dist[r] + 1;
          q.push(r2);
        }
      }
    }
  }
  int best = -1;
  long best_key = -1;
  for (int r = 0; r < m; ++r) {
    const long d = dist[r] < 0 ? 1000000L : dist[r];
    // prefer unreached/far rows, then low degree, then random jitter
    const long key = d * 1000000L - row_deg[r] * 1000L + rng.next_below(997);
    if (key > best_key) {
      best_key = key;
      best = r;
    }
  }
  return best;
}

}  // namespace

LdpcCode LdpcCode::build(int n_info, int n_code, uint64_t seed) {
  if (n_code != 2 * n_info) throw std::invalid_argument("LdpcCode: rate must be 1/2");
  const int m = n_code - n_info;
  RngStream rng(seed, "ldpc");
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<std::vector<int>> col_rows(n_code), row_cols(m);
    std::vector<int> row_deg(m, 0);
    bool ok = true;
    for (int c = 0; c < n_code && ok; ++c) {
      for (int e = 0; e < 3; ++e) {
        const int r = place_edge(c, col_rows, row_cols, row_deg, m, rng);
        if (r < 0 || std::find(col_rows[c].begin(), col_rows[c].end(), r) != col_rows[c].end()) {
          ok = false;
          break;
        }
        col_rows[c].push_back(r);
        row_cols[r].push_back(c);
        ++row_deg[r];
      }
    }
    if (!ok) continue;
    LdpcCode code;
    code.n_info_ = n_info;
    code.n_code_ = n_code;
    code.row_cols_ = std::move(row_cols);
    for (auto& rc : code.row_cols_) std::sort(rc.begin(), rc.end());
    try {
      code.finalize();
    } catch (const std::runtime_error&) {
      continue;  // singular parity part; retry construction
    }
    return code;
  }
  throw std::runtime_error("LdpcCode: construction failed after bounded retries");
}

void LdpcCode::finalize() {
  const int m = n_check();
  const int n = n_code_;
  col_rows_.assign(n, {});
  for (int r = 0; r < m; ++r)
    for (int c : row_cols_[r]) col_rows_[c].push_back(r);

  // GF(2) elimination with 64-bit packed rows to find pivot columns and the
  // reduced system parity(r) = XOR_{info terms} u.
  const int words = (n + 63) / 64;
  std::vector<std::vector<uint64_t>> rowbits(m, std::vector<uint64_t>(words, 0));
  for (int r = 0; r < m; ++r)
    for (int c : row_cols_[r]) rowbits[r][c / 64] ^= (1ull << (c % 64));

  std::vector<int> pivot_col(m, -1);
  std::vector<char> is_pivot(n, 0);
  int rank = 0;
  for (int c = 0; c < n && rank < m; ++c) {
    int sel = -1;
    for (int r = rank; r < m; ++r) {
      if ((rowbits[r][c / 64] >> (c % 64)) & 1) {
        sel = r;
        break;
      }
    }
    if (sel < 0) continue;
    std::swap(rowbits[rank], rowbits[sel]);
    for (int r = 0; r < m; ++r) {
      if (r != rank && ((rowbits[r][c / 64] >> (c % 64)) & 1)) {
        for (int w = 0; w < words; ++w) rowbits[r][w] ^= rowbits[rank][w];
      }
    }
    pivot_col[rank] = c;
    is_pivot[c] = 1;
    ++rank;
  }
  if (rank < m) throw std::runtime_error("LdpcCode: parity matrix not full rank");

  info_pos_.clear();
  parity_pos_.assign(m, -1);
  for (int c = 0; c < n; ++c)
    if (!is_pivot[c]) info_pos_.push_back(c);
  if (static_cast<int>(info_pos_.size()) != n_info_)
    throw std::runtime_error("LdpcCode: unexpected info position count");
  enc_terms_.assign(m, {});
  for (int r = 0; r < m; ++r) {
    parity_pos_[r] = pivot_col[r];
    for (int idx = 0; idx < n_info_; ++idx) {
      const int c = info_pos_[idx];
      if ((rowbits[r][c / 64] >> (c % 64)) & 1) enc_terms_[r].push_back(idx);
    }
  }

  edge_row_.clear();
  edge_col_.clear();
  row_edges_.assign(m, {});
  col_edges_.assign(n, {});
  for (int r = 0; r < m; ++r) {
    for (int c : row_cols_[r]) {
      row_edges_[r].push_back(static_cast<int>(edge_row_.size()));
      col_edges_[c].push_back(static_cast<int>(edge_row_.size()));
      edge_row_.push_back(r);
      edge_col_.push_back(c);
    }
  }
}

ArrayXi LdpcCode::encode(const ArrayXi& info_bits) const {
  if (info_bits.size() != n_info_) throw std::invalid_argument("encode: length mismatch");
  ArrayXi c = ArrayXi::Zero(n_code_);
  for (int i = 0; i < n_info_; ++i) c(info_pos_[i]) = info_bits(i) & 1;
  for (int r = 0; r < n_check(); ++r) {
    int p = 0;
    for (int idx : enc_terms_[r]) p ^= info_bits(idx) & 1;
    c(parity_pos_[r]) = p;
  }
  return c;
}

bool LdpcCode::syndrome_ok(const ArrayXi& bits) const {
  for (const auto& rc : row_cols_) {
    int s = 0;
    for (int c : rc) s ^= bits(c) & 1;
    if (s) return false;
  }
  return true;
}

ArrayXi LdpcCode::extract_info(const ArrayXi& codeword) const {
  ArrayXi u(n_info_);
  for (int i = 0; i < n_info_; ++i) u(i) = codeword(info_pos_[i]);
  return u;
}

DecodeResult LdpcCode::decode_spa(const ArrayXr& channel_llr, int max_iters) const {
  if (channel_llr.size() != n_code_) throw std::invalid_argument("decode: length mismatch");
  const int ne = static_cast<int>(edge_row_.size());
  const int m = n_check();
  ArrayXr in = channel_llr.unaryExpr([](Real v) { return clamp_llr(v); });
  std::vector<Real> chk(ne, 0.0);  // check->var messages
  ArrayXr total = in;
  DecodeResult res;
  for (int it = 1; it <= max_iters; ++it) {
    // variable->check
    std::vector<Real> var(ne);
    for (int e = 0; e < ne; ++e) var[e] = clamp_llr(total(edge_col_[e]) - chk[e]);
    // check->var, tanh rule with exclusion by division-free two-pass
    for (int r = 0; r < m; ++r) {
      const auto& es = row_edges_[r];
      const int d = static_cast<int>(es.size());
      static thread_local std::vector<Real> t;
      t.assign(d, 0.0);
      for (int i = 0; i < d; ++i) t[i] = std::tanh(0.5 * var[es[i]]);
      for (int i = 0; i < d; ++i) {
        Real prod = 1.0;
        for (int j = 0; j < d; ++j)
          if (j != i) prod *= t[j];
        prod = std::min(std::max(prod, -0.999999999999), 0.999999999999);
        chk[es[i]] = clamp_llr(2.0 * std::atanh(prod));
      }
    }
    total = in;
    for (int e = 0; e < ne; ++e) total(edge_col_[e]) += chk[e];
    ArrayXi hard(n_code_);
    for (int c = 0; c < n_code_; ++c) hard(c) = total(c) < 0 ? 1 : 0;
    res.iterations = it;
    if (syndrome_ok(hard)) {
      res.converged = true;
      res.hard_bits = hard;
      break;
    }
    res.hard_bits = hard;
  }
  res.total = total;
  res.extrinsic = total - in;
  return res;
}

void LdpcCode::export_parity(std::ostream& os) const {
  for (int r = 0; r < n_check(); ++r)
    for (int c : row_cols_[r]) os << r << ' ' << c << '\n';
}

LdpcCode LdpcCode::import_parity(std::istream& is, int n_info) {
  std::vector<std::pair<int, int>> entries;
  int maxr = -1, maxc = -1;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int r, c;
    if (!(ls >> r >> c)) throw std::runtime_error("import_parity: malformed line: " + line);
    entries.emplace_back(r, c);
    maxr = std::max(maxr, r);
    maxc = std::max(maxc, c);
  }
  if (entries.empty()) throw std::runtime_error("import_parity: empty listing");
  LdpcCode code;
  code.n_info_ = n_info;
  code.n_code_ = maxc + 1;
  code.row_cols_.assign(maxr + 1, {});
  for (auto [r, c] : entries) code.row_cols_[r].push_back(c);
  for (auto& rc : code.row_cols_) std::sort(rc.begin(), rc.end());
  code.finalize();
  return code;
}

}  // namespace dcsjced
