#pragma once

#include <vector>

#include "dcsjced/rng.hpp"
#include "dcsjced/types.hpp"

namespace dcsjced {

// Maximal-length +-1 sequence from an LFSR with the given feedback taps
// (stage numbers, 1-based, e.g. {6,1} for x^6+x+1).  Throws if the polynomial
// is not primitive (detected by the state period) or the seed state is zero.
ArrayXr generate_m_sequence(int degree, const std::vector<int>& taps, uint64_t seed_state = 1);

// Default primitive taps per degree, used by the bench configs.
std::vector<int> default_m_taps(int degree);

std::vector<int> make_interleaver(int n, RngStream& rng);

// output[i] = input[permutation[i]]
ArrayXi interleave(const ArrayXi& bits, const std::vector<int>& perm);
ArrayXr interleave(const ArrayXr& values, const std::vector<int>& perm);
ArrayXi deinterleave(const ArrayXi& bits, const std::vector<int>& perm);
ArrayXr deinterleave(const ArrayXr& values, const std::vector<int>& perm);

ArrayXc map_symbols(const ArrayXi& coded_bits, const SymbolAlphabet& alphabet);
// nearest-point hard demapping back to bits
ArrayXi hard_demap(const ArrayXc& symbols, const SymbolAlphabet& alphabet);

Frame assemble_frame(const ArrayXr& pilot, const ArrayXc& data_symbols, const FrameConfig& cfg);

}  // namespace dcsjced
