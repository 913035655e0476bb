#include "dcsjced/bench.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "dcsjced/baseline.hpp"
#include "dcsjced/channel.hpp"
#include "dcsjced/fec.hpp"
#include "dcsjced/modem.hpp"
#include "dcsjced/turbo.hpp"

namespace dcsjced {

std::string to_string(EqualizerMode m) {
  switch (m) {
    case EqualizerMode::kDcsJced: return "dcs-jced";
    case EqualizerMode::kJced: return "jced";
    case EqualizerMode::kMmse: return "mmse";
  }
  return "?";
}

EqualizerMode mode_from_string(const std::string& s) {
  if (s == "dcs-jced") return EqualizerMode::kDcsJced;
  if (s == "jced") return EqualizerMode::kJced;
  if (s == "mmse") return EqualizerMode::kMmse;
  throw std::invalid_argument("unknown equalizer mode: " + s);
}

Real noise_var_from_ebn0(Real snr_db, const FrameConfig& fc) {
  return 1.0 / (fc.code_rate * fc.bits_per_symbol * std::pow(10.0, snr_db / 10.0));
}

void ExperimentConfig::validate() const {
  if (snr_db.empty()) throw std::invalid_argument("config: snr list empty");
  if (trials < 1) throw std::invalid_argument("config: trials < 1");
  if (frames < 1) throw std::invalid_argument("config: frames < 1");
  frame.validate();
  turbo.validate();
  hyper.validate();
}

void ExperimentConfig::apply_kv(const std::string& key, const std::string& value) {
  auto as_int = [&] { return std::stoi(value); };
  auto as_real = [&] { return std::stod(value); };
  if (key == "snr") {
    snr_db.clear();
    std::istringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) snr_db.push_back(std::stod(tok));
  } else if (key == "trials") trials = as_int();
  else if (key == "frames") frames = as_int();
  else if (key == "mode") mode = mode_from_string(value);
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "pilot_len") frame.n_pilot = as_int();
  else if (key == "data_len") frame.n_data = as_int();
  else if (key == "guard_len") frame.n_guard = as_int();
  else if (key == "info_bits") frame.n_info_bits = as_int();
  else if (key == "channel_len") frame.channel_len = as_int();
  else if (key == "turbo_iters") turbo.t_turbo = as_int();
  else if (key == "tfp") turbo.t_fp = as_int();
  else if (key == "tbp") turbo.t_bp = as_int();
  else if (key == "inner_iters") turbo.t_inner = as_int();
  else if (key == "breakout_tol") turbo.breakout_tol = as_real();
  else if (key == "damping") turbo.damping = as_real();
  else if (key == "domain") {
    if (value == "time") turbo.domain = Domain::kTime;
    else if (value == "freq") turbo.domain = Domain::kFrequency;
    else throw std::invalid_argument("config: domain must be time|freq");
  } else if (key == "schedule") {
    if (value == "serial") turbo.schedule = Schedule::kSerial;
    else if (value == "parallel") turbo.schedule = Schedule::kParallel;
    else throw std::invalid_argument("config: schedule must be serial|parallel");
  } else if (key == "p01") hyper.p01 = as_real();
  else if (key == "lambda") hyper.lambda = as_real();
  else if (key == "zeta_re") hyper.zeta = Complex(as_real(), hyper.zeta.imag());
  else if (key == "zeta_im") hyper.zeta = Complex(hyper.zeta.real(), as_real());
  else if (key == "varrho") hyper.varrho = as_real();
  else if (key == "rho") hyper.rho = as_real();
  else if (key == "mmse_n1") mmse.n1 = as_int();
  else if (key == "mmse_n2") mmse.n2 = as_int();
  else if (key == "jced_inner_iters") jced_t_inner = as_int();
  else if (key == "channel_trace") channel_trace = value;
  else if (key == "out") output_path = value;
  else if (key == "workers") workers = as_int();
  else if (key == "interleave_order") {
    if (value != "coded" && value != "info")
      throw std::invalid_argument("config: interleave_order must be coded|info");
    interleave_info_bits = (value == "info");
  } else if (key == "timing") record_timing = (value == "1" || value == "true");
  else throw std::invalid_argument("config: unknown key " + key);
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: missing '=' at line " + std::to_string(lineno));
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    cfg.apply_kv(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ArrayXr bench_pilot(const FrameConfig& fc) {
  int degree = 2;
  while ((1 << degree) - 1 < fc.n_pilot) ++degree;
  const ArrayXr mseq = generate_m_sequence(degree, default_m_taps(degree));
  return mseq.head(fc.n_pilot);
}

TrialData synthesize_trial(const ExperimentConfig& cfg, const LdpcCode& code,
                           const SymbolAlphabet& alphabet, const ArrayXr& pilot,
                           const ChannelTrack* trace, Real snr_db, int trial) {
  const FrameConfig& fc = cfg.frame;
  const int K = cfg.frames;
  const int L = fc.channel_len;
  const Real noise_var = noise_var_from_ebn0(snr_db, fc);

  TrialData data;
  data.pilot = pilot;
  if (trace) {
    const int T = trace->num_frames();
    const int start = T > K ? (trial * K) % (T - K + 1) : 0;
    for (int k = 0; k < K; ++k) data.track.frames.push_back(trace->frames[(start + k) % T]);
  } else {
    for (uint64_t lane = 0;; ++lane) {
      RngStream ch_rng(cfg.seed, "channel", trial, lane);
      data.track = sample_channel_track(cfg.hyper, L, K, ch_rng);
      bool ok = true;
      for (const auto& st : data.track.frames)
        if (st.cir.abs2().sum() <= 0) ok = false;
      if (ok) break;  // an all-zero frame makes NMSE undefined; redraw
    }
  }

  RngStream bits_rng(cfg.seed, "bits", trial);
  RngStream il_rng(cfg.seed, "interleaver", trial);
  RngStream noise_rng(cfg.seed, "noise", trial);
  for (int k = 0; k < K; ++k) {
    ArrayXi u(fc.n_info_bits);
    for (int i = 0; i < fc.n_info_bits; ++i) u(i) = static_cast<int>(bits_rng.next_u64() & 1);
    data.info.push_back(u);
    ArrayXi inter;
    if (cfg.interleave_info_bits) {
      // nonstandard ordering: permute the info bits before encoding; the
      // turbo loop then runs without a coded-domain interleaver
      data.info_perms.push_back(make_interleaver(fc.n_info_bits, il_rng));
      inter = code.encode(interleave(u, data.info_perms.back()));
      std::vector<int> identity(code.n_code());
      for (size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
      data.interleavers.push_back(identity);
    } else {
      const ArrayXi coded = code.encode(u);
      data.interleavers.push_back(make_interleaver(code.n_code(), il_rng));
      inter = interleave(coded, data.interleavers.back());
    }
    const ArrayXc xs = map_symbols(inter, alphabet);
    const Frame frame = assemble_frame(pilot, xs, fc);
    data.received.push_back(
        apply_channel(frame.symbols, data.track.frames[k].cir, noise_var, noise_rng));
  }
  return data;
}

TrialOutcome compute_metrics(const ExperimentConfig& cfg, const TrialData& data,
                             const EqualizerOutput& eq) {
  const int K = cfg.frames;
  const int iters = static_cast<int>(eq.info_bits_per_iter.size());
  TrialOutcome res;
  res.bit_errors.assign(iters, 0);
  res.nmse_sum.assign(iters, 0.0);
  res.frames = K;
  for (int t = 0; t < iters; ++t) {
    for (int k = 0; k < K; ++k) {
      ArrayXi got = eq.info_bits_per_iter[t][k];
      if (cfg.interleave_info_bits) got = deinterleave(got, data.info_perms[k]);
      res.bit_errors[t] += (got != data.info[k]).count();
      const Real denom = data.track.frames[k].cir.abs2().sum();
      const Real err = (eq.h_hat_per_iter[t][k] - data.track.frames[k].cir).abs2().sum();
      res.nmse_sum[t] += err / std::max(denom, 1e-300);
    }
  }
  return res;
}

TrialOutcome run_single_trial(const ExperimentConfig& cfg, const LdpcCode& code,
                              const SymbolAlphabet& alphabet, const ArrayXr& pilot,
                              const ChannelTrack* trace, Real snr_db, int trial) {
  const Real noise_var = noise_var_from_ebn0(snr_db, cfg.frame);
  const TrialData data = synthesize_trial(cfg, code, alphabet, pilot, trace, snr_db, trial);
  RngStream init_rng(cfg.seed, "init", trial);

  TurboInputs in;
  in.received = data.received;
  in.pilot = data.pilot;
  in.code = &code;
  in.interleavers = data.interleavers;
  in.alphabet = alphabet;
  in.frame_cfg = cfg.frame;

  EqualizerOutput eq;
  if (cfg.mode == EqualizerMode::kDcsJced) {
    eq = run_dcs_jced(in, cfg.turbo, cfg.hyper, noise_var, init_rng);
  } else if (cfg.mode == EqualizerMode::kJced) {
    TurboConfig tc = cfg.turbo;
    tc.t_fp = 1;
    tc.t_bp = 0;
    tc.t_inner = cfg.jced_t_inner;
    eq = jced_single_frame(in, tc, cfg.hyper, noise_var, init_rng);
  } else {
    MmseConfig mc = cfg.mmse;
    mc.t_turbo = cfg.turbo.t_turbo;
    eq = run_mmse_turbo(in, mc, noise_var);
  }
  return compute_metrics(cfg, data, eq);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SymbolAlphabet alphabet = SymbolAlphabet::qpsk_gray();
  const LdpcCode code =
      LdpcCode::build(cfg.frame.n_info_bits,
                      static_cast<int>(std::lround(cfg.frame.n_info_bits / cfg.frame.code_rate)),
                      cfg.seed);
  const ArrayXr pilot = bench_pilot(cfg.frame);

  ChannelTrack trace;
  const bool use_trace = !cfg.channel_trace.empty();
  if (use_trace) trace = import_cir_trace(cfg.channel_trace);

  std::vector<ResultRow> rows;
  const int nworkers =
      cfg.workers > 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  for (Real snr : cfg.snr_db) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<TrialOutcome> results(cfg.trials);
    std::atomic<int> next{0};
    auto worker = [&] {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= cfg.trials) break;
        results[t] =
            run_single_trial(cfg, code, alphabet, pilot, use_trace ? &trace : nullptr, snr, t);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    const int iters = static_cast<int>(results[0].bit_errors.size());
    const auto t1 = std::chrono::steady_clock::now();
    const Real wall = std::chrono::duration<Real>(t1 - t0).count();
    for (int t = 0; t < iters; ++t) {
      ResultRow row;
      row.snr_db = snr;
      row.mode = to_string(cfg.mode);
      row.turbo_iter = t + 1;
      long errs = 0;
      Real nmse = 0;
      long nframes = 0;
      for (const auto& r : results) {
        errs += r.bit_errors[t];
        nmse += r.nmse_sum[t];
        nframes += r.frames;
      }
      row.bit_errors = errs;
      row.bits_total = static_cast<long>(cfg.trials) * cfg.frames * cfg.frame.n_info_bits;
      row.ber = static_cast<Real>(errs) / static_cast<Real>(row.bits_total);
      const Real mean_nmse = nmse / static_cast<Real>(nframes);
      row.nmse_db = std::max(10.0 * std::log10(std::max(mean_nmse, 0.0)), -100.0);
      row.frames = cfg.frames;
      row.wall_time_s = cfg.record_timing ? wall : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string csv_header() {
  return "snr_db,mode,turbo_iter,ber,nmse_db,bit_errors,bits_total,frames,wall_time_s";
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream os(path, std::ios::binary);  // LF endings on every platform
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  os << csv_header() << '\n';
  char buf[64];
  auto fmt = [&buf](Real v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    os << fmt(r.snr_db) << ',' << r.mode << ',' << r.turbo_iter << ',' << fmt(r.ber) << ','
       << fmt(r.nmse_db) << ',' << r.bit_errors << ',' << r.bits_total << ',' << r.frames << ','
       << fmt(r.wall_time_s) << '\n';
  }
}

}  // namespace dcsjced
