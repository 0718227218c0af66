#include "cogat/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cogat/errors.hpp"

namespace cogat {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw InputError("config field '" + std::string(key) + "': invalid value '" + std::string(value) + "' (expected " +
                   expected + ")");
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const std::string s(v);
    const double d = std::stod(s, &used);
    if (used != s.size()) bad_value(key, v, "a number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, v, "a number");
  }
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<double> parse_alpha_list(std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::istringstream is{std::string(text)};
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(to_double("alpha_grid", item));
  }
  return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "train_path") train_path = v;
  else if (key == "dev_path") dev_path = v;
  else if (key == "test_path") test_path = v;
  else if (key == "out_dir") out_dir = v;
  else if (key == "hidden_dim") model.hidden_dim = to_size(key, v);
  else if (key == "vocab_dim") model.vocab_dim = to_size(key, v);
  else if (key == "heads") model.heads = to_size(key, v);
  else if (key == "layers") model.layers = to_size(key, v);
  else if (key == "max_tokens") model.max_tokens = to_size(key, v);
  else if (key == "epochs") train.epochs = to_size(key, v);
  else if (key == "eval_interval") train.eval_interval = to_size(key, v);
  else if (key == "patience") train.patience = to_size(key, v);
  else if (key == "batch_size") train.batch_size = to_size(key, v);
  else if (key == "learning_rate") train.learning_rate = to_double(key, v);
  else if (key == "seed") train.seed = to_size(key, v);
  else if (key == "use_evidence_loss") train.use_evidence_loss = to_bool(key, v);
  else if (key == "l_max") train.l_max = to_size(key, v);
  else if (key == "max_steps") train.max_steps = to_size(key, v);
  else if (key == "grad_clip") train.grad_clip = to_double(key, v);
  else if (key == "mode") {
    auto m = parse_mask_mode(v);
    if (!m) bad_value(key, v, "soft, hard or no_mask");
    train.mode = *m;
  } else if (key == "alpha_grid") {
    alpha_grid = parse_alpha_list(v);
  } else {
    throw InputError("unknown config field '" + std::string(key) + "'");
  }
}

void RunConfig::validate() const {
  auto field = [](const char* name, bool ok, const std::string& why) {
    if (!ok) throw InputError(std::string("config field '") + name + "': " + why);
  };
  field("hidden_dim", model.hidden_dim > 0, "must be positive");
  field("vocab_dim", model.vocab_dim > 0, "must be positive");
  field("layers", model.layers > 0, "must be positive");
  field("max_tokens", model.max_tokens > 0, "must be positive");
  const auto heads = model.resolved_heads();
  field("heads", heads > 0 && model.hidden_dim % heads == 0,
        "hidden_dim " + std::to_string(model.hidden_dim) + " is not divisible by " + std::to_string(heads));
  field("epochs", train.epochs > 0, "must be positive");
  field("eval_interval", train.eval_interval > 0, "must be positive");
  field("patience", train.patience > 0, "must be positive");
  field("batch_size", train.batch_size > 0, "must be positive");
  field("l_max", train.l_max > 0, "must be positive");
  field("learning_rate", train.learning_rate > 0.0, "must be positive");
  field("grad_clip", train.grad_clip > 0.0, "must be positive");
  field("alpha_grid", !alpha_grid.empty(), "must not be empty");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    field("alpha_grid", alpha_grid[i] >= 0.0 && alpha_grid[i] <= 1.0, "values must lie in [0,1]");
    field("alpha_grid", i == 0 || alpha_grid[i] > alpha_grid[i - 1], "values must be strictly increasing");
  }
}

std::string RunConfig::to_text() const {
  std::map<std::string, std::string> kv;
  kv["train_path"] = train_path.string();
  kv["dev_path"] = dev_path.string();
  kv["test_path"] = test_path.string();
  kv["out_dir"] = out_dir.string();
  kv["hidden_dim"] = std::to_string(model.hidden_dim);
  kv["vocab_dim"] = std::to_string(model.vocab_dim);
  kv["heads"] = std::to_string(model.resolved_heads());
  kv["layers"] = std::to_string(model.layers);
  kv["max_tokens"] = std::to_string(model.max_tokens);
  kv["epochs"] = std::to_string(train.epochs);
  kv["eval_interval"] = std::to_string(train.eval_interval);
  kv["patience"] = std::to_string(train.patience);
  kv["batch_size"] = std::to_string(train.batch_size);
  kv["learning_rate"] = format_double(train.learning_rate);
  kv["seed"] = std::to_string(train.seed);
  kv["use_evidence_loss"] = train.use_evidence_loss ? "true" : "false";
  kv["l_max"] = std::to_string(train.l_max);
  kv["max_steps"] = std::to_string(train.max_steps);
  kv["grad_clip"] = format_double(train.grad_clip);
  kv["mode"] = std::string(mask_mode_name(train.mode));
  std::string grid;
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) grid += (i ? "," : "") + format_double(alpha_grid[i]);
  kv["alpha_grid"] = grid;
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

RunConfig RunConfig::parse(std::string_view text, std::string_view source) {
  RunConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(std::string(source) + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      cfg.set(trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse(buf.str(), path.string());
}

}  // namespace cogat
