#include "ftlab/config.hpp"

#include <sstream>

#include "ftlab/io.hpp"

namespace ftlab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool to_bool(const std::string& v, const std::string& path) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  fail("config: '" + path + "' expects a boolean, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& v, const std::string& path) {
  try {
    return std::stoull(v);
  } catch (...) {
    fail("config: '" + path + "' expects an unsigned integer, got '" + v + "'");
  }
}

std::int64_t to_i64(const std::string& v, const std::string& path) {
  try {
    return std::stoll(v);
  } catch (...) {
    fail("config: '" + path + "' expects an integer, got '" + v + "'");
  }
}

double to_f64(const std::string& v, const std::string& path) {
  try {
    return std::stod(v);
  } catch (...) {
    fail("config: '" + path + "' expects a number, got '" + v + "'");
  }
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

void ExperimentConfig::set(const std::string& path, const std::string& value) {
  // model
  if (path == "model.num_layers") model.num_layers = to_u64(value, path);
  else if (path == "model.hidden_dim") model.hidden_dim = to_u64(value, path);
  else if (path == "model.num_heads") model.num_heads = to_u64(value, path);
  else if (path == "model.ffn_dim") model.ffn_dim = to_u64(value, path);
  else if (path == "model.vocab_size") model.vocab_size = to_u64(value, path);
  else if (path == "model.max_seq_len") model.max_seq_len = to_u64(value, path);
  else if (path == "model.dropout_p") model.dropout_p = to_f64(value, path);
  else if (path == "model.num_classes") model.num_classes = to_u64(value, path);
  // data
  else if (path == "data.num_states") data.num_states = to_u64(value, path);
  else if (path == "data.self_loop") data.self_loop = to_f64(value, path);
  else if (path == "data.emit_noise") data.emit_noise = to_f64(value, path);
  else if (path == "data.label_threshold") data.label_threshold = to_f64(value, path);
  else if (path == "data.table_seed") data.table_seed = to_u64(value, path);
  else if (path == "data.task_seed") data.task_seed = to_u64(value, path);
  else if (path == "data.train_size") data.train_size = to_u64(value, path);
  else if (path == "data.dev_size") data.dev_size = to_u64(value, path);
  else if (path == "data.metric") {
    metric_from_name(value);  // validates
    data.metric = value;
  }
  else if (path == "data.corpus_seed") data.corpus_seed = to_u64(value, path);
  else if (path == "data.corpus_size") data.corpus_size = to_u64(value, path);
  else if (path == "data.heldout_count") data.heldout_count = to_u64(value, path);
  else if (path == "data.downsample_n") data.downsample_n = to_u64(value, path);
  else if (path == "data.downsample_seed") data.downsample_seed = to_u64(value, path);
  else if (path == "data.match_iterations") data.match_iterations = to_bool(value, path);
  // optim
  else if (path == "optim.preset") {
    optim.preset = value;
    if (value != "custom") {
      const AdamConfig p = optimizer_preset(value);  // also validates the name
      optim.beta1 = p.beta1;
      optim.beta2 = p.beta2;
      optim.epsilon = p.epsilon;
      optim.weight_decay = p.weight_decay;
      optim.clip_norm = p.clip_norm;
    }
  } else if (path == "optim.lr") optim.lr = to_f64(value, path);
  else if (path == "optim.beta1") optim.beta1 = to_f64(value, path);
  else if (path == "optim.beta2") optim.beta2 = to_f64(value, path);
  else if (path == "optim.epsilon") optim.epsilon = to_f64(value, path);
  else if (path == "optim.weight_decay") optim.weight_decay = to_f64(value, path);
  else if (path == "optim.bias_correction") optim.bias_correction = to_bool(value, path);
  else if (path == "optim.clip_norm") optim.clip_norm = to_f64(value, path);
  // schedule
  else if (path == "schedule.warmup_ratio") warmup_ratio = to_f64(value, path);
  // run
  else if (path == "run.seed") run.seed = to_u64(value, path);
  else if (path == "run.epochs") run.epochs = to_i64(value, path);
  else if (path == "run.total_iterations") run.total_iterations = to_i64(value, path);
  else if (path == "run.batch_size") run.batch_size = to_i64(value, path);
  else if (path == "run.eval_every") run.eval_every = to_i64(value, path);
  else if (path == "run.init_checkpoint") run.init_checkpoint = value;
  else if (path == "run.provenance") run.provenance = value;
  // sweep
  else if (path == "sweep.plan") sweep.plan = value;
  else if (path == "sweep.seed_count") sweep.seed_count = to_u64(value, path);
  else if (path == "sweep.seed_list") sweep.seed_list = value;
  else if (path == "sweep.axes") sweep.axes = value;
  else if (path == "sweep.workers") sweep.workers = to_u64(value, path);
  // surface
  else if (path == "surface.a_min") surface.a_min = to_f64(value, path);
  else if (path == "surface.a_max") surface.a_max = to_f64(value, path);
  else if (path == "surface.b_min") surface.b_min = to_f64(value, path);
  else if (path == "surface.b_max") surface.b_max = to_f64(value, path);
  else if (path == "surface.resolution") surface.resolution = to_u64(value, path);
  else if (path == "surface.batch_size") surface.batch_size = to_u64(value, path);
  else if (path == "surface.quantity") {
    require(value == "loss" || value == "grad-norm", "config: surface.quantity must be loss or grad-norm");
    surface.quantity = value;
  } else if (path == "surface.checkpoint_pretrained") surface.checkpoint_pretrained = value;
  else if (path == "surface.checkpoint_failed") surface.checkpoint_failed = value;
  else if (path == "surface.checkpoint_success") surface.checkpoint_success = value;
  else if (path == "surface.svg") surface.svg = to_bool(value, path);
  // probe
  else if (path == "probe.checkpoint_finetuned") probe.checkpoint_finetuned = value;
  else if (path == "probe.checkpoint_pretrained") probe.checkpoint_pretrained = value;
  else if (path == "probe.mask_seed") probe.mask_seed = to_u64(value, path);
  else if (path == "probe.eval_size") probe.eval_size = to_u64(value, path);
  else if (path == "probe.svg") probe.svg = to_bool(value, path);
  // output
  else if (path == "output.dir") out_dir = value;
  else fail("config: unknown key '" + path + "'");
}

std::string ExperimentConfig::get(const std::string& path) const {
  if (path == "model.num_layers") return std::to_string(model.num_layers);
  if (path == "model.hidden_dim") return std::to_string(model.hidden_dim);
  if (path == "model.num_heads") return std::to_string(model.num_heads);
  if (path == "model.ffn_dim") return std::to_string(model.ffn_dim);
  if (path == "model.vocab_size") return std::to_string(model.vocab_size);
  if (path == "model.max_seq_len") return std::to_string(model.max_seq_len);
  if (path == "model.dropout_p") return fmt_double(model.dropout_p);
  if (path == "model.num_classes") return std::to_string(model.num_classes);
  if (path == "data.num_states") return std::to_string(data.num_states);
  if (path == "data.self_loop") return fmt_double(data.self_loop);
  if (path == "data.emit_noise") return fmt_double(data.emit_noise);
  if (path == "data.label_threshold") return fmt_double(data.label_threshold);
  if (path == "data.table_seed") return std::to_string(data.table_seed);
  if (path == "data.task_seed") return std::to_string(data.task_seed);
  if (path == "data.train_size") return std::to_string(data.train_size);
  if (path == "data.dev_size") return std::to_string(data.dev_size);
  if (path == "data.metric") return data.metric;
  if (path == "data.corpus_seed") return std::to_string(data.corpus_seed);
  if (path == "data.corpus_size") return std::to_string(data.corpus_size);
  if (path == "data.heldout_count") return std::to_string(data.heldout_count);
  if (path == "data.downsample_n") return std::to_string(data.downsample_n);
  if (path == "data.downsample_seed") return std::to_string(data.downsample_seed);
  if (path == "data.match_iterations") return bool_str(data.match_iterations);
  if (path == "optim.preset") return optim.preset;
  if (path == "optim.lr") return fmt_double(optim.lr);
  if (path == "optim.beta1") return fmt_double(optim.beta1);
  if (path == "optim.beta2") return fmt_double(optim.beta2);
  if (path == "optim.epsilon") return fmt_double(optim.epsilon);
  if (path == "optim.weight_decay") return fmt_double(optim.weight_decay);
  if (path == "optim.bias_correction") return bool_str(optim.bias_correction);
  if (path == "optim.clip_norm") return fmt_double(optim.clip_norm);
  if (path == "schedule.warmup_ratio") return fmt_double(warmup_ratio);
  if (path == "run.seed") return std::to_string(run.seed);
  if (path == "run.epochs") return std::to_string(run.epochs);
  if (path == "run.total_iterations") return std::to_string(run.total_iterations);
  if (path == "run.batch_size") return std::to_string(run.batch_size);
  if (path == "run.eval_every") return std::to_string(run.eval_every);
  if (path == "run.init_checkpoint") return run.init_checkpoint;
  if (path == "run.provenance") return run.provenance;
  if (path == "sweep.plan") return sweep.plan;
  if (path == "sweep.seed_count") return std::to_string(sweep.seed_count);
  if (path == "sweep.seed_list") return sweep.seed_list;
  if (path == "sweep.axes") return sweep.axes;
  if (path == "sweep.workers") return std::to_string(sweep.workers);
  if (path == "surface.a_min") return fmt_double(surface.a_min);
  if (path == "surface.a_max") return fmt_double(surface.a_max);
  if (path == "surface.b_min") return fmt_double(surface.b_min);
  if (path == "surface.b_max") return fmt_double(surface.b_max);
  if (path == "surface.resolution") return std::to_string(surface.resolution);
  if (path == "surface.batch_size") return std::to_string(surface.batch_size);
  if (path == "surface.quantity") return surface.quantity;
  if (path == "surface.checkpoint_pretrained") return surface.checkpoint_pretrained;
  if (path == "surface.checkpoint_failed") return surface.checkpoint_failed;
  if (path == "surface.checkpoint_success") return surface.checkpoint_success;
  if (path == "surface.svg") return bool_str(surface.svg);
  if (path == "probe.checkpoint_finetuned") return probe.checkpoint_finetuned;
  if (path == "probe.checkpoint_pretrained") return probe.checkpoint_pretrained;
  if (path == "probe.mask_seed") return std::to_string(probe.mask_seed);
  if (path == "probe.eval_size") return std::to_string(probe.eval_size);
  if (path == "probe.svg") return bool_str(probe.svg);
  if (path == "output.dir") return out_dir;
  fail("config: unknown key '" + path + "'");
}

const std::vector<std::string>& ExperimentConfig::known_paths() {
  static const std::vector<std::string> paths = {
      "model.num_layers", "model.hidden_dim", "model.num_heads", "model.ffn_dim", "model.vocab_size",
      "model.max_seq_len", "model.dropout_p", "model.num_classes",
      "data.num_states", "data.self_loop", "data.emit_noise", "data.label_threshold", "data.table_seed",
      "data.task_seed", "data.train_size", "data.dev_size", "data.metric", "data.corpus_seed", "data.corpus_size",
      "data.heldout_count", "data.downsample_n", "data.downsample_seed", "data.match_iterations",
      "optim.preset", "optim.lr", "optim.beta1", "optim.beta2", "optim.epsilon", "optim.weight_decay",
      "optim.bias_correction", "optim.clip_norm",
      "schedule.warmup_ratio",
      "run.seed", "run.epochs", "run.total_iterations", "run.batch_size", "run.eval_every", "run.init_checkpoint",
      "run.provenance",
      "sweep.plan", "sweep.seed_count", "sweep.seed_list", "sweep.axes", "sweep.workers",
      "surface.a_min", "surface.a_max", "surface.b_min", "surface.b_max", "surface.resolution", "surface.batch_size",
      "surface.quantity", "surface.checkpoint_pretrained", "surface.checkpoint_failed", "surface.checkpoint_success",
      "surface.svg",
      "probe.checkpoint_finetuned", "probe.checkpoint_pretrained", "probe.mask_seed", "probe.eval_size", "probe.svg",
      "output.dir",
  };
  return paths;
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  std::string current_section;
  for (const auto& path : known_paths()) {
    const auto dot = path.find('.');
    const std::string section = path.substr(0, dot);
    if (section != current_section) {
      if (!out.empty()) out += "\n";
      out += "[" + section + "]\n";
      current_section = section;
    }
    out += path.substr(dot + 1) + " = " + get(path) + "\n";
  }
  return out;
}

GrammarSpec ExperimentConfig::grammar_spec() const {
  GrammarSpec spec;
  spec.num_states = data.num_states;
  spec.vocab_size = model.vocab_size;
  spec.seq_len = model.max_seq_len;
  spec.self_loop = data.self_loop;
  spec.emit_noise = data.emit_noise;
  spec.label_threshold = data.label_threshold;
  spec.table_seed = data.table_seed;
  return spec;
}

AdamConfig ExperimentConfig::adam_config() const {
  AdamConfig c = optim.preset == "custom" ? AdamConfig{} : optimizer_preset(optim.preset);
  c.alpha = optim.lr;
  c.beta1 = optim.beta1;
  c.beta2 = optim.beta2;
  c.epsilon = optim.epsilon;
  c.weight_decay = optim.weight_decay;
  c.bias_correction = optim.bias_correction;
  c.clip_norm = optim.clip_norm;
  return c;
}

std::vector<std::uint64_t> ExperimentConfig::sweep_seeds() const {
  if (!sweep.seed_list.empty()) {
    std::vector<std::uint64_t> seeds;
    std::istringstream in(sweep.seed_list);
    std::uint64_t s;
    while (in >> s) seeds.push_back(s);
    require(!seeds.empty(), "config: sweep.seed_list is set but holds no integers");
    return seeds;
  }
  require(sweep.seed_count >= 1, "config: sweep.seed_count must be >= 1");
  std::vector<std::uint64_t> seeds(sweep.seed_count);
  for (std::size_t i = 0; i < sweep.seed_count; ++i) seeds[i] = 101 + i;
  return seeds;
}

std::vector<std::pair<std::string, std::vector<std::string>>> ExperimentConfig::sweep_axes() const {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  if (sweep.axes.empty()) return axes;
  std::istringstream in(sweep.axes);
  std::string axis;
  while (std::getline(in, axis, ';')) {
    axis = trim(axis);
    if (axis.empty()) continue;
    const auto eq = axis.find('=');
    require(eq != std::string::npos, "config: sweep.axes entry '" + axis + "' missing '='");
    const std::string path = trim(axis.substr(0, eq));
    std::vector<std::string> values;
    std::istringstream vin(axis.substr(eq + 1));
    std::string v;
    while (std::getline(vin, v, '|')) {
      v = trim(v);
      if (!v.empty()) values.push_back(v);
    }
    require(!values.empty(), "config: sweep.axes entry '" + axis + "' has no values");
    axes.emplace_back(path, values);
  }
  return axes;
}

ExperimentConfig parse_config(const std::string& ini_text) {
  ExperimentConfig config;
  std::istringstream in(ini_text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      require(t.back() == ']', "config: malformed section header at line " + std::to_string(lineno));
      section = t.substr(1, t.size() - 2);
      continue;
    }
    const auto eq = t.find('=');
    require(eq != std::string::npos, "config: expected 'key = value' at line " + std::to_string(lineno));
    require(!section.empty(), "config: key outside any section at line " + std::to_string(lineno));
    config.set(section + "." + trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

}  // namespace ftlab
