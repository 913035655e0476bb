#pragma once

#include <string>
#include <vector>

#include "dcsjced/types.hpp"

namespace dcsjced {

enum class EqualizerMode { kDcsJced, kJced, kMmse };

std::string to_string(EqualizerMode m);
EqualizerMode mode_from_string(const std::string& s);

struct ExperimentConfig {
  std::vector<Real> snr_db;  // Eb/N0 points
  int trials = 200;
  int frames = 10;  // K
  EqualizerMode mode = EqualizerMode::kDcsJced;
  FrameConfig frame;
  TurboConfig turbo;
  HyperParams hyper;
  MmseConfig mmse;
  uint64_t seed = 1;
  std::string channel_trace;  // empty = synthetic
  std::string output_path;
  int jced_t_inner = 100;  // inner budget of the single-frame baseline
  int workers = 0;         // 0 = hardware concurrency
  // apply the interleaver to the info bits before encoding instead of to the
  // coded stream (the nonstandard ordering; see README)
  bool interleave_info_bits = false;
  // measured wall time makes CSV bytes run-dependent; off by default so that
  // a fixed seed reproduces the file exactly
  bool record_timing = false;

  void validate() const;

  // flat key=value text, '#' comments; unknown keys rejected
  static ExperimentConfig from_file(const std::string& path);
  void apply_kv(const std::string& key, const std::string& value);
};

struct ResultRow {
  Real snr_db = 0;
  std::string mode;
  int turbo_iter = 0;
  Real ber = 0;
  Real nmse_db = 0;
  long bit_errors = 0;
  long bits_total = 0;
  int frames = 0;
  Real wall_time_s = 0;
};

// noise variance from Eb/N0 with unit symbol energy: 1/(R*Q*10^(snr/10))
Real noise_var_from_ebn0(Real snr_db, const FrameConfig& fc);

// Everything one trial transmits: drawn from named RNG substreams keyed by
// (seed, trial) only, so every mode sees the same channels, bits and noise.
struct TrialData {
  ChannelTrack track;
  std::vector<ArrayXi> info;
  std::vector<std::vector<int>> interleavers;
  std::vector<std::vector<int>> info_perms;  // only for interleave_order=info
  std::vector<ArrayXc> received;
  ArrayXr pilot;
};

struct TrialOutcome {
  std::vector<long> bit_errors;  // per turbo iteration
  std::vector<Real> nmse_sum;    // per turbo iteration, summed over frames
  int frames = 0;
};

class LdpcCode;

TrialData synthesize_trial(const ExperimentConfig& cfg, const LdpcCode& code,
                           const SymbolAlphabet& alphabet, const ArrayXr& pilot,
                           const ChannelTrack* trace, Real snr_db, int trial);

TrialOutcome run_single_trial(const ExperimentConfig& cfg, const LdpcCode& code,
                              const SymbolAlphabet& alphabet, const ArrayXr& pilot,
                              const ChannelTrack* trace, Real snr_db, int trial);

// BER / NMSE fragments from truth and an equalizer output
TrialOutcome compute_metrics(const ExperimentConfig& cfg, const TrialData& data,
                             const EqualizerOutput& eq);

// pilot sequence used by the experiments: m-sequence truncated to n_pilot
ArrayXr bench_pilot(const FrameConfig& fc);

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

void write_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::string csv_header();

}  // namespace dcsjced
