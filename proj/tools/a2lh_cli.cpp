// Experiment driver: synthetic data, training, encoding, evaluation,
// ablations, parameter sweeps and convergence traces.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "a2lh/a2lh.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using namespace a2lh;

namespace {

struct RunConfig {
  std::string x1, x2, labels;
  SynthSpec synth;
  double query_fraction = 0.1;
  std::vector<Eigen::Index> bits = {32};
  Hyperparams hyper;
  std::string variant = "full";
  Eigen::Index anchors = 2500;
  std::vector<std::string> tasks = {"I2T", "T2I"};
  Eigen::Index map_cutoff = 0;
  bool reencode_db = false;
  std::vector<Eigen::Index> pn_grid = EvalOptions::default_precision_grid();
  std::string out = "a2lh_out";
  std::string run;
  std::string model;
  std::string input;
  Eigen::Index modality = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  std::string param;
  std::vector<double> grid;

  bool file_mode() const { return !x1.empty() || !x2.empty() || !labels.empty(); }

  std::vector<std::uint64_t> seed_list() const { return seeds.empty() ? std::vector<std::uint64_t>{seed} : seeds; }

  EvalOptions eval_options() const {
    EvalOptions o;
    o.precision_grid = pn_grid;
    if (map_cutoff > 0) o.map_cutoff = map_cutoff;
    return o;
  }

  /// Sorted key=value listing of every effective setting.
  std::string canonical() const {
    std::map<std::string, std::string> kv;
    auto put = [&](const std::string& k, const auto& v) {
      std::ostringstream os;
      os.precision(17);
      os << v;
      kv[k] = os.str();
    };
    auto join = [](const auto& xs) {
      std::ostringstream os;
      os.precision(17);
      for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
      return os.str();
    };
    if (file_mode()) {
      put("x1", x1);
      put("x2", x2);
      put("labels", labels);
    } else {
      put("n", synth.n);
      put("classes", synth.c);
      put("d1", synth.d1);
      put("d2", synth.d2);
      put("noise", synth.noise);
      put("noise2", synth.noise2);
      put("multilabel", synth.multilabel);
    }
    put("query_fraction", query_fraction);
    kv["bits"] = join(bits);
    put("alpha", hyper.alpha);
    put("beta", hyper.beta);
    put("eta", hyper.eta);
    put("lambda", hyper.lambda);
    put("omega", hyper.omega);
    put("zeta", hyper.zeta);
    put("iters", hyper.max_iter);
    put("tol", hyper.tol);
    put("ridge", hyper.ridge);
    put("variant", variant);
    put("anchors", anchors);
    kv["task"] = join(tasks);
    put("map_cutoff", map_cutoff);
    put("reencode_db", reencode_db);
    kv["pn_grid"] = join(pn_grid);
    put("seed", seed);
    kv["seeds"] = join(seed_list());
    if (!param.empty()) {
      put("param", param);
      kv["grid"] = join(grid);
    }
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
  }
};

/// Comma-separated list option. The whole list is one value, so a later
/// occurrence (command line over config file) replaces an earlier one.
template <typename T>
CLI::Option* add_list_option(CLI::App* app, const std::string& name, std::vector<T>& target,
                             const std::string& desc) {
  return app->add_option_function<std::string>(
      name,
      [&target, name](const std::string& text) {
        std::vector<T> out;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (item.empty()) continue;
          T v{};
          if (!CLI::detail::lexical_cast(item, v))
            throw CLI::ValidationError(name, "cannot parse list entry '" + item + "'");
          out.push_back(v);
        }
        if (out.empty()) throw CLI::ValidationError(name, "empty list");
        target = std::move(out);
      },
      desc);
}

void add_data_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--x1", cfg.x1, "Modality 1 (image) feature matrix, d1 x n (.bin or .csv)");
  app->add_option("--x2", cfg.x2, "Modality 2 (text) feature matrix, d2 x n");
  app->add_option("--labels", cfg.labels, "Label matrix, c x n, entries 0/1");
  app->add_option("--n", cfg.synth.n, "Synthetic instance count");
  app->add_option("--classes", cfg.synth.c, "Synthetic class count");
  app->add_option("--d1", cfg.synth.d1, "Synthetic modality 1 dimension");
  app->add_option("--d2", cfg.synth.d2, "Synthetic modality 2 dimension");
  app->add_option("--noise", cfg.synth.noise, "Synthetic noise standard deviation");
  app->add_option("--noise2", cfg.synth.noise2, "Modality 2 noise override (negative: same as --noise)");
  app->add_flag("--multilabel", cfg.synth.multilabel, "Give each synthetic instance 1-3 labels");
}

void add_seed_option(CLI::App* app, RunConfig& cfg) {
  app->add_option("--seed", cfg.seed, "Root seed for every random substream");
}

void add_model_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--query-fraction", cfg.query_fraction, "Fraction of instances held out as queries")
      ->check(CLI::Range(0.0, 1.0));
  add_list_option(app, "--bits", cfg.bits, "Code length(s), comma separated");
  app->add_option("--alpha", cfg.hyper.alpha);
  app->add_option("--beta", cfg.hyper.beta);
  app->add_option("--eta", cfg.hyper.eta);
  app->add_option("--lambda", cfg.hyper.lambda);
  app->add_option("--omega", cfg.hyper.omega);
  app->add_option("--zeta", cfg.hyper.zeta);
  app->add_option("--iters", cfg.hyper.max_iter, "Maximum sweeps T");
  app->add_option("--tol", cfg.hyper.tol, "Relative objective change that stops training");
  app->add_option("--ridge", cfg.hyper.ridge, "Relative ridge on inverted matrices");
  app->add_option("--anchors", cfg.anchors, "Kernel anchors per modality (capped at n)");
  app->add_option("--variant", cfg.variant, "full | no_kernel | no_multisemantic | relaxed_B");
}

void add_eval_options(CLI::App* app, RunConfig& cfg) {
  add_list_option(app, "--task", cfg.tasks, "I2T and/or T2I, comma separated");
  app->add_option("--map-cutoff", cfg.map_cutoff, "Truncate AP at this rank (0 = full database)");
  app->add_flag("--reencode-db", cfg.reencode_db, "Encode the database through W instead of using step-one codes");
  add_list_option(app, "--pn-grid", cfg.pn_grid, "Cutoffs for precision@n, comma separated");
}

void add_multi_seed_option(CLI::App* app, RunConfig& cfg) {
  add_list_option(app, "--seeds", cfg.seeds, "Seeds to average over, comma separated (default: --seed)");
}

/// Flat key=value lines become --key=value arguments; '#' starts a comment.
std::vector<std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::vector<std::string> args;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    args.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

/// Moves --config FILE out of the argument list and splices its entries in
/// right after the subcommand, so explicit flags given later win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> rest;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      from_file = read_config_file(args[++i]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      from_file = read_config_file(args[i].substr(9));
    } else {
      rest.push_back(args[i]);
    }
  }
  if (rest.empty()) return rest;
  std::vector<std::string> out = {rest.front()};
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.file_mode()) {
    if (cfg.x1.empty() || cfg.x2.empty() || cfg.labels.empty())
      throw ValueError("file input needs all of --x1, --x2 and --labels");
    Dataset ds;
    ds.modalities.push_back(load_matrix(cfg.x1, format_from_path(cfg.x1), 0));
    ds.modalities.push_back(load_matrix(cfg.x2, format_from_path(cfg.x2), 1));
    ds.labels = load_labels(cfg.labels, format_from_path(cfg.labels));
    ds.validate();
    return ds;
  }
  SynthSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  return make_synthetic(spec);
}

PipelineConfig pipeline_config(const RunConfig& cfg, Eigen::Index bits) {
  PipelineConfig p;
  p.hyper = cfg.hyper;
  p.hyper.k = bits;
  p.hyper.seed = cfg.seed;
  p.variant = parse_variant(cfg.variant);
  p.anchors = cfg.anchors;
  return p;
}

std::vector<Task> task_list(const RunConfig& cfg) {
  std::vector<Task> t;
  for (const auto& s : cfg.tasks) t.push_back(parse_task(s));
  return t;
}

void write_dataset(const Dataset& ds, const fs::path& dir, const std::string& prefix, cli::Manifest& mf) {
  for (std::size_t m = 0; m < ds.modalities.size(); ++m) {
    const fs::path p = dir / (prefix + "X" + std::to_string(m + 1) + ".bin");
    write_matrix(ds.modalities[m], p, MatrixFormat::binary);
    mf.add(p);
  }
  const fs::path lp = dir / (prefix + "labels.bin");
  write_labels(ds.labels, lp, MatrixFormat::binary);
  mf.add(lp);
}

Dataset read_dataset(const fs::path& dir, const std::string& prefix, bool with_features) {
  Dataset ds;
  if (with_features) {
    for (int m = 0; m < 2; ++m)
      ds.modalities.push_back(
          load_matrix(dir / (prefix + "X" + std::to_string(m + 1) + ".bin"), MatrixFormat::binary, m));
  }
  ds.labels = load_labels(dir / (prefix + "labels.bin"), MatrixFormat::binary);
  return ds;
}

std::string model_name(Eigen::Index k) { return "model_k" + std::to_string(k) + ".a2lh"; }
std::string codes_name(Eigen::Index k) { return "codes_k" + std::to_string(k) + ".bin"; }
std::string trace_name(Eigen::Index k) { return "trace_k" + std::to_string(k) + ".csv"; }

int cmd_synth(const RunConfig& cfg) {
  const fs::path out = cfg.out;
  fs::create_directories(out);
  const Dataset ds = load_dataset(cfg);
  cli::Manifest mf("synth", cfg.canonical(), cfg.seed);
  write_dataset(ds, out, "", mf);
  mf.write(out / "manifest.json");
  std::cerr << "synth: wrote " << ds.size() << " instances to " << out << '\n';
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const fs::path out = cfg.out;
  fs::create_directories(out);
  const Dataset ds = load_dataset(cfg);
  const Split sp = split(ds, cfg.query_fraction, cfg.seed);
  cli::Manifest mf("train", cfg.canonical(), cfg.seed);
  write_dataset(sp.database, out, "db_", mf);
  write_dataset(sp.query, out, "query_", mf);
  for (Eigen::Index bits : cfg.bits) {
    const TrainedModel tm = train_model(sp.database, pipeline_config(cfg, bits));
    save_model(tm.model, out / model_name(bits));
    write_raw_matrix(tm.codes, out / codes_name(bits), MatrixFormat::binary);
    write_trace_csv(out / trace_name(bits), tm.trace);
    mf.add(out / model_name(bits));
    mf.add(out / codes_name(bits));
    mf.add(out / trace_name(bits));
    std::cerr << "train: k=" << bits << " variant=" << cfg.variant << " sweeps=" << tm.trace.iterations()
              << " objective=" << tm.trace.objective.back() << '\n';
  }
  mf.write(out / "manifest.json");
  return 0;
}

int cmd_encode(const RunConfig& cfg) {
  if (cfg.model.empty() || cfg.input.empty()) throw ValueError("encode needs --model and --input");
  const HashModel hm = load_model(cfg.model);
  const Eigen::MatrixXd x = read_matrix(cfg.input, format_from_path(cfg.input));
  const Eigen::MatrixXd codes = encode(hm, cfg.modality, x);
  write_raw_matrix(codes, cfg.out, format_from_path(cfg.out));
  std::cerr << "encode: " << codes.cols() << " codes of " << codes.rows() << " bits -> " << cfg.out << '\n';
  return 0;
}

std::vector<Eigen::Index> models_in_run(const fs::path& run, const RunConfig& cfg, bool bits_given) {
  if (bits_given) return cfg.bits;
  std::vector<Eigen::Index> found;
  for (const auto& e : fs::directory_iterator(run)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("model_k", 0) == 0 && e.path().extension() == ".a2lh")
      found.push_back(std::stol(name.substr(7, name.size() - 7 - 5)));
  }
  std::sort(found.begin(), found.end());
  if (found.empty()) throw ValueError("no model_k*.a2lh files in '" + run.string() + "'");
  return found;
}

int cmd_eval(const RunConfig& cfg, bool bits_given, bool out_given) {
  const fs::path run = cfg.run.empty() ? fs::path(cfg.out) : fs::path(cfg.run);
  const fs::path out = out_given ? fs::path(cfg.out) : run;
  fs::create_directories(out);
  const Dataset query = read_dataset(run, "query_", true);
  const Dataset database = read_dataset(run, "db_", cfg.reencode_db);
  cli::Manifest mf("eval", cfg.canonical(), cfg.seed);
  std::vector<EvalReport> reports;
  for (Eigen::Index bits : models_in_run(run, cfg, bits_given)) {
    const HashModel hm = load_model(run / model_name(bits));
    const Eigen::MatrixXd codes = read_matrix(run / codes_name(bits), MatrixFormat::binary);
    if (codes.cols() != database.size() || codes.rows() != hm.k)
      throw ShapeError("codes file does not match the database split or model");
    Dataset db = database;
    if (!cfg.reencode_db) db.modalities.assign(2, FeatureMatrix(Eigen::MatrixXd::Zero(1, 1)));
    for (Task task : task_list(cfg)) {
      const EvalReport r = evaluate_task(hm, codes, db, query, task, cfg.eval_options(), cfg.reencode_db);
      const std::string stem = std::string(to_string(task)) + "_k" + std::to_string(bits);
      {
        std::ofstream js(out / ("report_" + stem + ".json"));
        js << to_json(r).dump(2) << '\n';
      }
      {
        std::ofstream pn(out / ("pn_" + stem + ".csv"));
        write_precision_curve_csv(pn, r);
      }
      mf.add(out / ("report_" + stem + ".json"));
      mf.add(out / ("pn_" + stem + ".csv"));
      std::cout << to_string(task) << " k=" << bits << " mAP=" << r.mAP << '\n';
      reports.push_back(r);
    }
  }
  {
    std::ofstream csv(out / "eval.csv");
    write_report_csv(csv, reports);
  }
  mf.add(out / "eval.csv");
  mf.write(out / "manifest_eval.json");
  return 0;
}

/// Train on the seed's split and return the mAP of every requested task.
std::vector<double> run_once(RunConfig cfg, std::uint64_t seed, Eigen::Index bits) {
  cfg.seed = seed;
  const Dataset ds = load_dataset(cfg);
  const Split sp = split(ds, cfg.query_fraction, seed);
  const TrainedModel tm = train_model(sp.database, pipeline_config(cfg, bits));
  std::vector<double> maps;
  for (Task task : task_list(cfg))
    maps.push_back(evaluate_task(tm.model, tm.codes, sp.database, sp.query, task, cfg.eval_options(),
                                 cfg.reencode_db)
                       .mAP);
  return maps;
}

void write_seed_header(std::ostream& os, const RunConfig& cfg) {
  os << "# seeds=";
  const auto seeds = cfg.seed_list();
  for (std::size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : "") << seeds[i];
  os << "\n# config_sha256=" << cli::sha256_of(cfg.canonical()) << '\n';
}

int cmd_ablate(const RunConfig& cfg) {
  const fs::path out = cfg.out;
  fs::create_directories(out);
  const auto seeds = cfg.seed_list();
  const auto tasks = task_list(cfg);
  const fs::path path = out / "ablation.csv";
  std::ofstream csv(path);
  write_seed_header(csv, cfg);
  csv << "variant,task,k,mAP_mean";
  for (auto s : seeds) csv << ",mAP_seed" << s;
  csv << '\n';
  csv.precision(10);
  for (Eigen::Index bits : cfg.bits) {
    for (Variant v : {Variant::full, Variant::no_kernel, Variant::no_multisemantic, Variant::relaxed_B}) {
      RunConfig c = cfg;
      c.variant = std::string(to_string(v));
      std::vector<std::vector<double>> per_seed;
      for (auto s : seeds) per_seed.push_back(run_once(c, s, bits));
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        double mean = 0.0;
        for (const auto& m : per_seed) mean += m[t];
        mean /= static_cast<double>(per_seed.size());
        csv << to_string(v) << ',' << to_string(tasks[t]) << ',' << bits << ',' << mean;
        for (const auto& m : per_seed) csv << ',' << m[t];
        csv << '\n';
        std::cout << to_string(v) << ' ' << to_string(tasks[t]) << " k=" << bits << " mAP=" << mean << '\n';
      }
    }
  }
  csv.close();
  cli::Manifest mf("ablate", cfg.canonical(), cfg.seed);
  mf.add(path);
  mf.write(out / "manifest_ablate.json");
  return 0;
}

void set_param(Hyperparams& h, const std::string& name, double value) {
  if (name == "alpha") h.alpha = value;
  else if (name == "beta") h.beta = value;
  else if (name == "eta") h.eta = value;
  else if (name == "omega") h.omega = value;
  else if (name == "zeta") h.zeta = value;
  else if (name == "lambda") h.lambda = value;
  else throw ValueError("unknown sweep parameter '" + name + "' (alpha, beta, eta, omega, zeta, lambda)");
}

int cmd_sweep(const RunConfig& cfg) {
  Hyperparams probe = cfg.hyper;
  set_param(probe, cfg.param, 1.0);
  if (cfg.grid.empty()) throw ValueError("sweep needs --grid");
  const fs::path out = cfg.out;
  fs::create_directories(out);
  const auto tasks = task_list(cfg);
  const fs::path path = out / ("sweep_" + cfg.param + ".csv");
  std::ofstream csv(path);
  write_seed_header(csv, cfg);
  csv << cfg.param;
  for (Task t : tasks) csv << ",mAP_" << to_string(t);
  csv << '\n';
  csv.precision(10);
  for (double value : cfg.grid) {
    RunConfig c = cfg;
    set_param(c.hyper, cfg.param, value);
    std::vector<double> mean(tasks.size(), 0.0);
    const auto seeds = cfg.seed_list();
    for (auto s : seeds) {
      const auto maps = run_once(c, s, cfg.bits.front());
      for (std::size_t t = 0; t < tasks.size(); ++t) mean[t] += maps[t] / static_cast<double>(seeds.size());
    }
    csv << value;
    for (double m : mean) csv << ',' << m;
    csv << '\n';
    std::cout << cfg.param << '=' << value;
    for (std::size_t t = 0; t < tasks.size(); ++t) std::cout << ' ' << to_string(tasks[t]) << '=' << mean[t];
    std::cout << '\n';
  }
  csv.close();
  cli::Manifest mf("sweep", cfg.canonical(), cfg.seed);
  mf.add(path);
  mf.write(out / ("manifest_sweep_" + cfg.param + ".json"));
  return 0;
}

int cmd_trace(RunConfig cfg, bool tol_given) {
  if (!tol_given) cfg.hyper.tol = 0.0;
  const fs::path out = cfg.out;
  fs::create_directories(out);
  const Dataset ds = load_dataset(cfg);
  const Split sp = split(ds, cfg.query_fraction, cfg.seed);
  cli::Manifest mf("trace", cfg.canonical(), cfg.seed);
  for (Eigen::Index bits : cfg.bits) {
    const PipelineConfig p = pipeline_config(cfg, bits);
    std::vector<Eigen::MatrixXd> phi;
    for (const auto& x : sp.database.modalities) {
      if (p.variant == Variant::no_kernel) {
        phi.push_back(x.values());
      } else {
        const KernelModel km = fit_kernel(x, std::min(p.anchors, sp.database.size()), p.hyper.seed);
        phi.push_back(apply_kernel(km, x.values()));
      }
    }
    const StepOneResult r = train_step1(std::move(phi), sp.database.labels, p.hyper, p.variant);
    const fs::path path = out / trace_name(bits);
    write_trace_csv(path, r.trace);
    mf.add(path);
    std::cerr << "trace: k=" << bits << " sweeps=" << r.trace.iterations() << " -> " << path << '\n';
  }
  mf.write(out / "manifest_trace.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args;
  try {
    args = expand_config(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"Two-step adaptive asymmetric label-guided cross-modal hashing"};
  app.name("a2lh");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all");
  RunConfig cfg;

  auto* synth = app.add_subcommand("synth", "Write a synthetic bimodal dataset");
  add_data_options(synth, cfg);
  add_seed_option(synth, cfg);
  synth->add_option("--out", cfg.out, "Output directory");

  auto* train = app.add_subcommand("train", "Learn codes and hash functions; write model, codes, trace");
  add_data_options(train, cfg);
  add_seed_option(train, cfg);
  add_model_options(train, cfg);
  train->add_option("--out", cfg.out, "Output directory");

  auto* enc = app.add_subcommand("encode", "Encode raw features of one modality with a trained model");
  enc->add_option("--model", cfg.model, "Model file")->required();
  enc->add_option("--modality", cfg.modality, "0 = image, 1 = text");
  enc->add_option("--input", cfg.input, "Feature matrix d x n")->required();
  enc->add_option("--out", cfg.out, "Output code matrix (k x n, +-1)")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate the models of a training run");
  eval->add_option("--run", cfg.run, "Directory written by train");
  auto* eval_out = eval->add_option("--out", cfg.out, "Report directory (default: the run directory)");
  auto* eval_bits = add_list_option(eval, "--bits", cfg.bits, "Restrict to these code lengths");
  add_seed_option(eval, cfg);
  add_eval_options(eval, cfg);

  auto* ablate = app.add_subcommand("ablate", "Compare full, no_kernel, no_multisemantic and relaxed_B");
  add_data_options(ablate, cfg);
  add_seed_option(ablate, cfg);
  add_multi_seed_option(ablate, cfg);
  add_model_options(ablate, cfg);
  add_eval_options(ablate, cfg);
  ablate->add_option("--out", cfg.out, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "mAP as one hyperparameter varies over a grid");
  add_data_options(sweep, cfg);
  add_seed_option(sweep, cfg);
  add_multi_seed_option(sweep, cfg);
  add_model_options(sweep, cfg);
  add_eval_options(sweep, cfg);
  sweep->add_option("--param", cfg.param, "alpha | beta | eta | omega | zeta | lambda")->required();
  add_list_option(sweep, "--grid", cfg.grid, "Values, comma separated")->required();
  sweep->add_option("--out", cfg.out, "Output directory");

  auto* trace = app.add_subcommand("trace", "Convergence trace of step one (tol defaults to 0)");
  add_data_options(trace, cfg);
  add_seed_option(trace, cfg);
  add_model_options(trace, cfg);
  trace->add_option("--out", cfg.out, "Output directory");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) return cmd_synth(cfg);
    if (*train) return cmd_train(cfg);
    if (*enc) return cmd_encode(cfg);
    if (*eval) return cmd_eval(cfg, eval_bits->count() > 0, eval_out->count() > 0);
    if (*ablate) return cmd_ablate(cfg);
    if (*sweep) return cmd_sweep(cfg);
    if (*trace) return cmd_trace(cfg, trace->get_option("--tol")->count() > 0);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
