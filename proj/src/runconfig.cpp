#include "mint/runconfig.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mint {

namespace {

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an unsigned integer");
  }
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "patients") patients = to_int(key, value);
  else if (key == "threads") threads = to_int(key, value);
  else if (key == "stages") stages = to_int(key, value);
  else if (key == "interactions") interactions = to_int(key, value);
  else if (key == "seekers") seekers = to_int(key, value);
  else if (key == "helpers") helpers = to_int(key, value);
  else if (key == "span_days") span_days = to_int(key, value);
  else if (key == "gap") gap = to_double(key, value);
  else if (key == "noise") noise = to_double(key, value);
  else if (key == "T") T = to_int(key, value);
  else if (key == "senior_w_threads") senior_w_threads = to_double(key, value);
  else if (key == "senior_w_stages") senior_w_stages = to_double(key, value);
  else if (key == "senior_w_tenure") senior_w_tenure = to_double(key, value);
  else if (key == "d_thread") d_thread = to_int(key, value);
  else if (key == "d_stage") d_stage = to_int(key, value);
  else if (key == "d_x") d_x = to_int(key, value);
  else if (key == "d_z") d_z = to_int(key, value);
  else if (key == "hidden") hidden = to_int(key, value);
  else if (key == "layers") layers = to_int(key, value);
  else if (key == "layer_avg") layer_avg = value;
  else if (key == "decoder_graph_cond") decoder_graph_cond = to_int(key, value);
  else if (key == "cons_mode") cons_mode = value;
  else if (key == "baseline_dim") baseline_dim = to_int(key, value);
  else if (key == "batch") batch = to_int(key, value);
  else if (key == "lr") lr = to_double(key, value);
  else if (key == "epochs") epochs = to_int(key, value);
  else if (key == "alpha") alpha = to_double(key, value);
  else if (key == "beta") beta = to_double(key, value);
  else if (key == "gamma") gamma = to_double(key, value);
  else if (key == "lambda") lambda = to_double(key, value);
  else if (key == "seed") seed = to_u64(key, value);
  else if (key == "ablation") ablation = value;
  else if (key == "patience") patience = to_int(key, value);
  else if (key == "clip") clip = to_double(key, value);
  else if (key == "train_frac") train_frac = to_double(key, value);
  else if (key == "val_frac") val_frac = to_double(key, value);
  else if (key == "ks") ks = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected `key = value`");
    }
    set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  os.precision(17);
  os << "patients = " << patients << '\n'
     << "threads = " << threads << '\n'
     << "stages = " << stages << '\n'
     << "interactions = " << interactions << '\n'
     << "seekers = " << seekers << '\n'
     << "helpers = " << helpers << '\n'
     << "span_days = " << span_days << '\n'
     << "gap = " << gap << '\n'
     << "noise = " << noise << '\n'
     << "T = " << T << '\n'
     << "senior_w_threads = " << senior_w_threads << '\n'
     << "senior_w_stages = " << senior_w_stages << '\n'
     << "senior_w_tenure = " << senior_w_tenure << '\n'
     << "d_thread = " << d_thread << '\n'
     << "d_stage = " << d_stage << '\n'
     << "d_x = " << d_x << '\n'
     << "d_z = " << d_z << '\n'
     << "hidden = " << hidden << '\n'
     << "layers = " << layers << '\n'
     << "layer_avg = " << layer_avg << '\n'
     << "decoder_graph_cond = " << decoder_graph_cond << '\n'
     << "cons_mode = " << cons_mode << '\n'
     << "baseline_dim = " << baseline_dim << '\n'
     << "batch = " << batch << '\n'
     << "lr = " << lr << '\n'
     << "epochs = " << epochs << '\n'
     << "alpha = " << alpha << '\n'
     << "beta = " << beta << '\n'
     << "gamma = " << gamma << '\n'
     << "lambda = " << lambda << '\n'
     << "seed = " << seed << '\n'
     << "ablation = " << ablation << '\n'
     << "patience = " << patience << '\n'
     << "clip = " << clip << '\n'
     << "train_frac = " << train_frac << '\n'
     << "val_frac = " << val_frac << '\n'
     << "ks = " << ks << '\n';
  return os.str();
}

GeneratorConfig RunConfig::generator_config() const {
  GeneratorConfig g;
  g.n_patients = patients;
  g.n_threads = threads;
  g.n_stages = stages;
  g.n_interactions = interactions;
  g.T = T;
  g.seniority_gap = gap;
  g.noise_rate = noise;
  g.seed = seed;
  g.n_seekers = seekers;
  g.n_helpers = helpers;
  g.span_days = span_days;
  return g;
}

DataConfig RunConfig::data_config() const {
  DataConfig d;
  d.T = T;
  d.senior_w_threads = senior_w_threads;
  d.senior_w_stages = senior_w_stages;
  d.senior_w_tenure = senior_w_tenure;
  return d;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.dims.d_thread = d_thread;
  m.dims.d_stage = d_stage;
  m.dims.d_x = d_x;
  m.dims.d_z = d_z;
  m.dims.hidden = hidden;
  m.layers = layers;
  if (layer_avg == "uniform") m.layer_avg = graph::LayerAverage::kUniform;
  else if (layer_avg == "paper") m.layer_avg = graph::LayerAverage::kPaperLiteral;
  else throw ConfigError("layer_avg must be uniform|paper");
  m.decoder_graph_cond = decoder_graph_cond != 0;
  if (cons_mode == "hinge") m.cons_mode = ConsMode::kHinge;
  else if (cons_mode == "raw") m.cons_mode = ConsMode::kRaw;
  else throw ConfigError("cons_mode must be hinge|raw");
  m.ablation = ablation_from_name(ablation);
  m.baseline_dim = baseline_dim;
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.batch_size = batch;
  t.learning_rate = lr;
  t.epochs = epochs;
  t.weights.alpha = alpha;
  t.weights.beta = beta;
  t.weights.gamma = gamma;
  t.weights.lambda = lambda;
  t.seed = seed;
  t.ablation = ablation_from_name(ablation);
  t.patience = patience;
  t.clip_norm = clip;
  t.train_frac = train_frac;
  t.val_frac = val_frac;
  return t;
}

std::vector<int> RunConfig::eval_ks() const {
  std::vector<int> out;
  std::stringstream ss(ks);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    out.push_back(to_int("ks", t));
  }
  if (out.empty()) throw ConfigError("ks must list at least one cutoff");
  for (int k : out) {
    if (k < 1) throw ConfigError("ks entries must be >= 1");
  }
  return out;
}

}  // namespace mint
