#include "cogat/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "cogat/adam.hpp"
#include "cogat/analysis.hpp"
#include "cogat/errors.hpp"

namespace cogat {

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ContractError(std::string("train config: ") + name + " must be positive");
  };
  positive(epochs, "epochs");
  positive(eval_interval, "eval_interval");
  positive(patience, "patience");
  positive(batch_size, "batch_size");
  positive(l_max, "l_max");
  if (!(learning_rate > 0.0)) throw ContractError("train config: learning_rate must be positive");
  if (!(grad_clip > 0.0)) throw ContractError("train config: grad_clip must be positive");
}

std::string TrainLog::to_csv() const {
  std::ostringstream os;
  os << "step,loss,dev_acc,dev_fever,mean_cosco_gold,mean_cosco_noise\n";
  os << std::setprecision(10);
  for (const auto& e : entries) {
    os << e.step << ',' << e.loss << ',' << e.dev_acc << ',' << e.dev_fever << ',' << e.mean_cosco_gold << ','
       << e.mean_cosco_noise << '\n';
  }
  return os.str();
}

LossTerms multi_task_loss(const Tensor& label_probs, Label gold_label, const Tensor& node_probs,
                          std::span<const int> gold_relevance, bool use_evidence_loss) {
  if (node_probs.rank() != 2 || node_probs.rows() != gold_relevance.size() || node_probs.cols() != 2) {
    throw ContractError("multi_task_loss: node probabilities " + shape_string(node_probs.shape()) + " do not align with " +
                        std::to_string(gold_relevance.size()) + " relevance labels");
  }
  LossTerms out;
  Tensor fact = cross_entropy(label_probs, static_cast<std::size_t>(gold_label));
  out.fact = fact.item();
  out.total = fact;
  if (!use_evidence_loss) return out;

  std::vector<Tensor> terms;
  for (std::size_t p = 0; p < gold_relevance.size(); ++p) {
    const int y = gold_relevance[p];
    if (y == kIgnoreRelevance) continue;
    if (y != 0 && y != 1) throw ContractError("multi_task_loss: relevance label must be 0 or 1");
    terms.push_back(cross_entropy(row(node_probs, p), static_cast<std::size_t>(y)));
  }
  if (terms.empty()) return out;
  Tensor evidence = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) evidence = add(evidence, terms[i]);
  evidence = scale(evidence, 1.0 / static_cast<double>(terms.size()));
  out.evidence = evidence.item();
  out.total = add(fact, evidence);
  return out;
}

std::vector<EvalRecord> Evaluation::records() const {
  std::vector<EvalRecord> out;
  out.reserve(instances.size());
  for (const auto& i : instances) out.push_back(i.record);
  return out;
}

std::vector<EvidenceKey> select_evidence(const ReasoningGraph& graph, std::span<const double> co_scos) {
  std::vector<std::size_t> order;
  for (std::size_t p = 0; p < graph.evidence.size(); ++p) {
    if (!graph.evidence[p].padded && co_scos[p] >= 0.5) order.push_back(p);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return co_scos[a] > co_scos[b]; });
  if (order.size() > kMaxPredictedEvidence) order.resize(kMaxPredictedEvidence);
  std::vector<EvidenceKey> out;
  for (auto p : order) out.push_back(graph.evidence[p].key());
  return out;
}

Evaluation evaluate(const ModelParams& params, std::span<const ClaimInstance> dataset, const EvalOptions& options) {
  Evaluation ev;
  ForwardOptions fwd{options.mode, options.alpha, true};
  double gold_sum = 0.0, noise_sum = 0.0, edge_sum = 0.0, node_sum = 0.0;
  std::size_t gold_n = 0, noise_n = 0, nei = 0;
  for (const auto& inst : dataset) {
    ReasoningGraph graph = build_graph(inst, options.l_max);
    GraphFeatures features = featurize(graph, params.config);
    ForwardOutput out = forward(features, params, fwd);

    InstanceResult r;
    std::copy(out.label_probs.values().begin(), out.label_probs.values().end(), r.label_probs.begin());
    r.record.id = inst.id;
    r.record.predicted_label = static_cast<Label>(argmax(r.label_probs));
    r.record.predicted_evidence = select_evidence(graph, out.co_scos);
    r.record.gold_label = inst.label;
    r.record.gold_evidence = inst.gold_evidence;
    r.relevance = features.relevance;
    r.trace = std::move(*out.trace);

    for (std::size_t p = 0; p < r.relevance.size(); ++p) {
      if (r.relevance[p] == 1) {
        gold_sum += out.co_scos[p];
        ++gold_n;
      } else if (r.relevance[p] == 0) {
        noise_sum += out.co_scos[p];
        ++noise_n;
      }
    }
    if (r.record.predicted_label == Label::Nei) ++nei;
    edge_sum += edge_entropy(r.trace);
    node_sum += node_entropy(r.trace);
    ev.instances.push_back(std::move(r));
  }
  if (ev.instances.empty()) throw ContractError("evaluate: empty dataset");
  const double n = static_cast<double>(ev.instances.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto records = ev.records();
  ev.scores = score_records(records);
  ev.nei_fraction = static_cast<double>(nei) / n;
  ev.mean_cosco_gold = gold_n ? gold_sum / static_cast<double>(gold_n) : nan;
  ev.mean_cosco_noise = noise_n ? noise_sum / static_cast<double>(noise_n) : nan;
  ev.mean_edge_entropy = edge_sum / n;
  ev.mean_node_entropy = node_sum / n;
  return ev;
}

namespace {

struct PreparedInstance {
  GraphFeatures features;
  Label label;
};

}  // namespace

TrainResult train(std::span<const ClaimInstance> train_set, std::span<const ClaimInstance> dev_set,
                  const ModelConfig& model_config, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  model_config.validate();
  if (train_set.empty()) throw ContractError("train: empty training set");
  if (dev_set.empty()) throw ContractError("train: empty dev set");

  std::vector<PreparedInstance> prepared;
  prepared.reserve(train_set.size());
  for (const auto& inst : train_set) {
    prepared.push_back({featurize(build_graph(inst, config.l_max), model_config), inst.label});
  }

  const auto floor_events_before = log_floor_events();
  ModelParams params = ModelParams::create(model_config, config.seed);
  std::vector<Tensor> weights = params.parameters();
  for (auto& w : weights) w.mutable_grad();
  Adam adam(weights, AdamOptions{config.learning_rate});
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const ForwardOptions fwd{config.mode, 1.0, false};
  const EvalOptions eval_opts{config.mode, 1.0, config.l_max};
  auto metric = [&](const Evaluation& ev) { return hooks.selection_metric ? hooks.selection_metric(ev) : ev.scores.fever; };

  TrainResult result{params.clone(), {}, {}, 0, 0};
  double best = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  double loss_since_eval = 0.0;
  std::size_t steps_since_eval = 0;
  std::size_t step = 0;
  bool stop = false;

  auto run_eval = [&] {
    Evaluation ev = evaluate(params, dev_set, eval_opts);
    TrainLogEntry entry{step, loss_since_eval / static_cast<double>(std::max<std::size_t>(steps_since_eval, 1)),
                        ev.scores.accuracy, ev.scores.fever, ev.mean_cosco_gold, ev.mean_cosco_noise};
    result.log.entries.push_back(entry);
    loss_since_eval = 0.0;
    steps_since_eval = 0;
    const double score = metric(ev);
    if (score > best) {
      best = score;
      stale = 0;
      result.best = params.clone();
    } else if (++stale >= config.patience) {
      stop = true;
    }
  };

  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size() && !stop; start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      Tensor batch_loss;
      for (std::size_t i = start; i < end; ++i) {
        const auto& inst = prepared[order[i]];
        ForwardOutput out = forward(inst.features, params, fwd);
        LossTerms loss = multi_task_loss(out.label_probs, inst.label, out.node_probs, inst.features.relevance,
                                         config.use_evidence_loss);
        Tensor scaled = scale(loss.total, inv_batch);
        batch_loss = batch_loss.defined() ? add(batch_loss, scaled) : scaled;
      }
      const double value = batch_loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("train: non-finite loss at step " + std::to_string(step + 1) + " (epoch " +
                           std::to_string(epoch + 1) + ")");
      }
      batch_loss.backward();
      clip_grad_norm(weights, config.grad_clip);
      adam.step();
      ++step;
      result.step_losses.push_back(value);
      loss_since_eval += value;
      ++steps_since_eval;
      if (step % config.eval_interval == 0) run_eval();
      if (config.max_steps != 0 && step >= config.max_steps) break;
    }
    if (config.max_steps != 0 && step >= config.max_steps) break;
  }
  if (!stop && steps_since_eval > 0) run_eval();

  result.steps = step;
  result.log_floor_events = log_floor_events() - floor_events_before;
  return result;
}

}  // namespace cogat
