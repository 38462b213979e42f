#include "gfra/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "gfra/fusion.hpp"
#include "gfra/rng.hpp"

namespace gfra {

namespace {

const std::vector<std::string> kKnownAlgorithms = {"vb-fusion", "vb-nofusion",
                                                   "genie"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  scene.validate();
  hyper.validate();
  if (window_w < 1) throw std::invalid_argument("pilot: window_w must be >= 1");
  if (pilot_length_min < 1 || pilot_length_min > pilot_length_max ||
      pilot_length_max > window_w)
    throw std::invalid_argument("pilot: need 1 <= length_min <= length_max <= window_w");
  if (p_max_sweep_mw.empty())
    throw std::invalid_argument("experiment: p_max_sweep_mw must be nonempty");
  for (double p : p_max_sweep_mw)
    if (p <= 0) throw std::invalid_argument("experiment: sweep powers must be > 0");
  if (trials_per_point < 1)
    throw std::invalid_argument("experiment: trials_per_point must be >= 1");
  if (algorithms.empty())
    throw std::invalid_argument("experiment: algorithms must be nonempty");
  for (const auto& a : algorithms)
    if (std::find(kKnownAlgorithms.begin(), kKnownAlgorithms.end(), a) ==
        kKnownAlgorithms.end())
      throw std::invalid_argument("experiment: unknown algorithm: " + a);
  if (detection_threshold <= 0)
    throw std::invalid_argument("fusion: threshold must be > 0");
  if (noise_scale < 0)
    throw std::invalid_argument("experiment: noise_scale must be >= 0");
  if (genie_prior_scale <= 0)
    throw std::invalid_argument("genie: prior_scale must be > 0");
  if (beta_jitter_db < 0)
    throw std::invalid_argument("fusion: beta_jitter_db must be >= 0");
  if (threads < 0) throw std::invalid_argument("experiment: threads must be >= 0");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, std::function<void(const std::string&)>> setters;
  auto d = [](double& field) {
    return [&field](const std::string& v) { field = std::stod(v); };
  };
  auto i = [](int& field) {
    return [&field](const std::string& v) { field = std::stoi(v); };
  };
  setters["scene.area_side_km"] = d(cfg.scene.area_side_km);
  setters["scene.num_aps"] = i(cfg.scene.num_aps);
  setters["scene.antennas_per_ap"] = i(cfg.scene.antennas_per_ap);
  setters["scene.ap_height_m"] = d(cfg.scene.ap_height_m);
  setters["scene.num_ues"] = i(cfg.scene.num_ues);
  setters["scene.num_active"] = i(cfg.scene.num_active);
  setters["scene.shadowing_stddev_db"] = d(cfg.scene.shadowing_stddev_db);
  setters["scene.pathloss_intercept_db"] = d(cfg.scene.pathloss_intercept_db);
  setters["scene.pathloss_exponent_db_per_decade"] =
      d(cfg.scene.pathloss_exponent_db_per_decade);
  setters["scene.bandwidth_hz"] = d(cfg.scene.bandwidth_hz);
  setters["scene.noise_psd_dbm_per_hz"] = d(cfg.scene.noise_psd_dbm_per_hz);
  setters["scene.grid_aps"] = [&cfg](const std::string& v) {
    cfg.scene.grid_aps = parse_bool(v, "scene.grid_aps");
  };
  setters["pilot.window_w"] = i(cfg.window_w);
  setters["pilot.length_min"] = i(cfg.pilot_length_min);
  setters["pilot.length_max"] = i(cfg.pilot_length_max);
  setters["hyper.a"] = d(cfg.hyper.a);
  setters["hyper.b"] = d(cfg.hyper.b);
  setters["hyper.max_inner"] = i(cfg.hyper.max_inner);
  setters["hyper.max_total"] = i(cfg.hyper.max_total);
  setters["hyper.alpha_cap"] = d(cfg.hyper.alpha_cap);
  setters["hyper.convergence_tol"] = d(cfg.hyper.convergence_tol);
  setters["experiment.p_max_sweep_mw"] = [&cfg](const std::string& v) {
    cfg.p_max_sweep_mw.clear();
    for (const auto& item : split_list(v)) cfg.p_max_sweep_mw.push_back(std::stod(item));
  };
  setters["experiment.trials_per_point"] = i(cfg.trials_per_point);
  setters["experiment.algorithms"] = [&cfg](const std::string& v) {
    cfg.algorithms = split_list(v);
  };
  setters["experiment.master_seed"] = [&cfg](const std::string& v) {
    cfg.master_seed = std::stoull(v);
  };
  setters["experiment.noise_scale"] = d(cfg.noise_scale);
  setters["experiment.threads"] = i(cfg.threads);
  setters["fusion.threshold"] = d(cfg.detection_threshold);
  setters["fusion.beta_jitter_db"] = d(cfg.beta_jitter_db);
  setters["genie.prior_scale"] = d(cfg.genie_prior_scale);
  setters["output.path"] = [&cfg](const std::string& v) { cfg.output_path = v; };
  setters["output.timing"] = [&cfg](const std::string& v) {
    cfg.timing = parse_bool(v, "output.timing");
  };

  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key: " + key);
    try {
      it->second(value);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": bad value for " + key + ": " + value);
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

struct AlgoOutcome {
  TrialScore score;
  double seconds = 0.0;
};

struct TrialOutcome {
  std::map<std::string, AlgoOutcome> by_algorithm;
};

double rel_inf_change(const std::vector<Eigen::VectorXd>& prev,
                      const std::vector<Eigen::VectorXd>& next) {
  double change = 0.0;
  for (std::size_t l = 0; l < prev.size(); ++l) {
    const double base = std::max(prev[l].lpNorm<Eigen::Infinity>(), 1e-300);
    change = std::max(change, (next[l] - prev[l]).lpNorm<Eigen::Infinity>() / base);
  }
  return change;
}

std::vector<int> detected_rows(const DetectionResult& det,
                               const std::vector<BlockRange>& blocks) {
  std::vector<int> rows;
  rows.reserve(det.detected_set.size());
  for (std::size_t j = 0; j < det.detected_set.size(); ++j)
    rows.push_back(blocks[det.detected_set[j]].begin + det.detected_offsets[j] - 1);
  return rows;
}

TrialOutcome run_trial(const ExperimentConfig& cfg, double p_max_mw,
                       std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  Rng rng(seed);
  SceneConfig sc = cfg.scene;
  sc.p_max_tx_mw = p_max_mw;
  sc.seed = seed;

  const NetworkScene scene = generate_scene(sc, rng);
  const PilotSet pilots = build_pilots(sc.num_ues, cfg.window_w,
                                       cfg.pilot_length_min, cfg.pilot_length_max, rng);
  const Dictionary dict = build_dictionary(pilots);
  GroundTruth truth = sample_activity(sc, scene, pilots.lengths, cfg.window_w, rng);
  const std::vector<int> masters = select_masters(scene.lsfc_linear);
  if (!truth.active_set.empty())
    allocate_power(scene, masters, truth, p_max_mw);
  const ReceivedSignals signals =
      synthesize_received(scene, sc.antennas_per_ap, pilots, truth, cfg.noise_scale, rng);

  // The CPU's LSFC knowledge, optionally degraded for sensitivity studies.
  Eigen::MatrixXd lsfc_cpu = scene.lsfc_linear;
  if (cfg.beta_jitter_db > 0) {
    std::normal_distribution<double> jitter(0.0, cfg.beta_jitter_db);
    for (Eigen::Index l = 0; l < lsfc_cpu.rows(); ++l)
      for (Eigen::Index k = 0; k < lsfc_cpu.cols(); ++k)
        lsfc_cpu(l, k) *= std::pow(10.0, jitter(rng) / 10.0);
  }
  const std::vector<int> masters_cpu = select_masters(lsfc_cpu);

  const int num_aps = sc.num_aps;
  const int rounds = cfg.hyper.outer_rounds();

  TrialOutcome out;
  for (const std::string& algo : cfg.algorithms) {
    const auto t0 = clock::now();
    DetectionResult det;
    det.channel_estimates.resize(num_aps);

    if (algo == "genie") {
      const std::vector<int> rows = true_support_rows(truth, dict.blocks);
      for (int l = 0; l < num_aps; ++l) {
        std::vector<double> prior_var(rows.size());
        for (std::size_t a = 0; a < rows.size(); ++a)
          prior_var[a] = scene.lsfc_linear(l, truth.active_set[a]) *
                         (truth.tx_powers_mw[a] / 1000.0) * cfg.genie_prior_scale;
        det.channel_estimates[l] =
            genie_estimate(dict.d, signals.z[l], rows, prior_var);
      }
      det.alpha_min = Eigen::VectorXd::Zero(sc.num_ues);
      det.detected_set = truth.active_set;
      det.detected_offsets = truth.start_offsets;
      for (std::size_t a = 0; a < truth.active_set.size(); ++a) {
        const auto bits = decode_offset(truth.start_offsets[a], 1,
                                        dict.blocks[truth.active_set[a]].width());
        det.decoded_bits.push_back(bits.value_or(""));
      }
    } else {
      const bool with_fusion = (algo == "vb-fusion");
      std::vector<Eigen::VectorXd> alphas(
          num_aps, Eigen::VectorXd::Ones(dict.total_columns));
      std::vector<InnerState> states(num_aps);
      for (int r = 0; r < rounds; ++r) {
        for (int l = 0; l < num_aps; ++l)
          states[l] = run_inner_loop_compact(dict.d, signals.z[l], alphas[l],
                                             cfg.hyper);
        std::vector<Eigen::VectorXd> next(num_aps);
        for (int l = 0; l < num_aps; ++l) next[l] = states[l].alpha_mean;
        if (with_fusion)
          next = fuse_alphas(next, lsfc_cpu, masters_cpu, dict.blocks);
        const double change = rel_inf_change(alphas, next);
        alphas = std::move(next);
        if (change < cfg.hyper.convergence_tol) break;
      }
      det = detect_users(alphas, masters_cpu, dict.blocks, cfg.detection_threshold);
      det.channel_estimates.resize(num_aps);
      const std::vector<int> rows = detected_rows(det, dict.blocks);
      for (int l = 0; l < num_aps; ++l)
        det.channel_estimates[l] = refine_channels(states[l].g_mean, rows);
    }

    AlgoOutcome ao;
    ao.score = score_trial(det, truth, dict.blocks, dict.total_columns, sc.num_ues);
    ao.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    out.by_algorithm.emplace(algo, std::move(ao));
  }
  return out;
}

int resolve_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("GFRA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string format_field(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string format_field(const std::optional<double>& v) {
  return v ? format_field(*v) : std::string();
}

}  // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const int num_threads = resolve_threads(config);
  const int trials = config.trials_per_point;

  std::vector<ResultRecord> records;
  for (std::size_t pi = 0; pi < config.p_max_sweep_mw.size(); ++pi) {
    const double p_max = config.p_max_sweep_mw[pi];
    std::vector<TrialOutcome> outcomes(trials);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= trials) return;
        try {
          outcomes[t] = run_trial(config, p_max,
                                  derive_trial_seed(config.master_seed, pi, t));
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    if (num_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < num_threads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (const std::string& algo : config.algorithms) {
      std::vector<TrialScore> scores;
      scores.reserve(trials);
      double seconds = 0.0;
      for (const auto& o : outcomes) {
        const auto& ao = o.by_algorithm.at(algo);
        scores.push_back(ao.score);
        seconds += ao.seconds;
      }
      const Summary s = aggregate(scores);
      ResultRecord r;
      r.algorithm = algo;
      r.p_max_mw = p_max;
      r.trials = trials;
      r.p_md = s.p_md;
      if (s.p_md) {
        r.p_md_ci_low = s.p_md_ci_low;
        r.p_md_ci_high = s.p_md_ci_high;
      }
      r.fa_rate = s.fa_rate;
      r.offset_accuracy = s.offset_accuracy;
      r.nmse = s.nmse;
      r.nmse_db = 10.0 * std::log10(s.nmse);
      r.nmse_ci_low = s.nmse_ci_low;
      r.nmse_ci_high = s.nmse_ci_high;
      r.wall_time_s = config.timing ? seconds : 0.0;
      r.seed = config.master_seed;
      records.push_back(std::move(r));
    }
  }
  return records;
}

const char* const kCsvHeader =
    "algorithm,p_max_mw,trials,p_md,p_md_ci_low,p_md_ci_high,fa_rate,"
    "offset_accuracy,nmse,nmse_db,nmse_ci_low,nmse_ci_high,wall_time_s,seed";

void emit_csv(const std::vector<ResultRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  out << kCsvHeader << "\n";
  for (const auto& r : records) {
    out << r.algorithm << ',' << format_field(r.p_max_mw) << ',' << r.trials << ','
        << format_field(r.p_md) << ',' << format_field(r.p_md_ci_low) << ','
        << format_field(r.p_md_ci_high) << ',' << format_field(r.fa_rate) << ','
        << format_field(r.offset_accuracy) << ',' << format_field(r.nmse) << ','
        << format_field(r.nmse_db) << ',' << format_field(r.nmse_ci_low) << ','
        << format_field(r.nmse_ci_high) << ',' << format_field(r.wall_time_s)
        << ',' << r.seed << "\n";
  }
  if (!out) throw std::runtime_error("emit_csv: write failed on " + path);
}

std::vector<ResultRecord> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader)
    throw std::runtime_error("parse_csv: unexpected header in " + path);
  std::vector<ResultRecord> records;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 14)
      throw std::runtime_error("parse_csv: expected 14 fields, got " +
                               std::to_string(fields.size()));
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return std::stod(s);
    };
    ResultRecord r;
    r.algorithm = fields[0];
    r.p_max_mw = std::stod(fields[1]);
    r.trials = std::stoi(fields[2]);
    r.p_md = opt(fields[3]);
    r.p_md_ci_low = opt(fields[4]);
    r.p_md_ci_high = opt(fields[5]);
    r.fa_rate = std::stod(fields[6]);
    r.offset_accuracy = opt(fields[7]);
    r.nmse = std::stod(fields[8]);
    r.nmse_db = std::stod(fields[9]);
    r.nmse_ci_low = std::stod(fields[10]);
    r.nmse_ci_high = std::stod(fields[11]);
    r.wall_time_s = std::stod(fields[12]);
    r.seed = std::stoull(fields[13]);
    records.push_back(std::move(r));
  }
  return records;
}

void emit_plotdata(const std::vector<ResultRecord>& records,
                   const std::string& prefix) {
  if (records.empty()) throw std::invalid_argument("emit_plotdata: no records");
  std::map<std::string, std::vector<const ResultRecord*>> by_algo;
  for (const auto& r : records) by_algo[r.algorithm].push_back(&r);
  for (auto& [algo, rows] : by_algo) {
    std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
      return a->p_max_mw < b->p_max_mw;
    });
    std::ofstream md(prefix + "_md_" + algo + ".tsv", std::ios::binary);
    std::ofstream nmse(prefix + "_nmse_" + algo + ".tsv", std::ios::binary);
    if (!md || !nmse)
      throw std::runtime_error("emit_plotdata: cannot open output files");
    for (const auto* r : rows) {
      if (r->p_md)
        md << format_field(r->p_max_mw) << "\t" << format_field(*r->p_md) << "\n";
      nmse << format_field(r->p_max_mw) << "\t" << format_field(r->nmse) << "\n";
    }
  }
}

}  // namespace gfra
