#include "tasksel/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "tasksel/allocation.hpp"
#include "tasksel/error.hpp"

namespace tasksel {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kParse, "manifest: " + what);
}

const ordered_json& field(const ordered_json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) malformed(std::string("missing '") + key + "'");
  return *it;
}

std::string param_text(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string render_manifest(const Pool& pool, const StrategyConfig& config,
                            const SelectionResult& result, const ManifestInputs& inputs) {
  ordered_json doc;
  doc["format"] = kManifestFormat;
  doc["strategy"] = strategy_name(config.strategy);
  doc["descriptor"] = result.descriptor;

  ordered_json params;
  params["pool"] = inputs.pool;
  params["embeddings"] = inputs.embeddings ? ordered_json(*inputs.embeddings) : ordered_json();
  params["scores_cache"] =
      inputs.scores_cache ? ordered_json(*inputs.scores_cache) : ordered_json();
  params["budget"] = config.budget;
  params["seed"] = config.seed;
  params["base_allocation"] = config.base_allocation;
  params["kernel"] = kernel_name(config.kernel.kind);
  params["gamma"] = config.kernel.gamma;
  params["jitter"] = config.jitter;
  doc["params"] = std::move(params);

  doc["seed"] = config.seed;
  doc["budget"] = config.budget;

  auto& ids = doc["selected_ids"] = ordered_json::array();
  for (auto i : result.selected) ids.push_back(pool[i].id);

  const auto& partition = pool.partition();
  auto& per_task = doc["per_task"] = ordered_json::array();
  for (std::size_t t = 0; t < partition.size(); ++t) {
    ordered_json row;
    row["task"] = partition.tasks[t];
    row["available"] = partition.counts[t];
    row["count"] = result.per_task[t];
    if (result.allocation) {
      row["alpha"] = result.allocation->alpha[t];
      row["alpha_ceil"] = ceil_alpha(result.allocation->alpha[t]);
    }
    if (result.task_confidence) row["conf_t"] = result.task_confidence->values[t];
    per_task.push_back(std::move(row));
  }
  if (result.objective_trace) doc["objective_trace"] = *result.objective_trace;
  doc["partial"] = result.partial;
  doc["warnings"] = result.warnings;
  return doc.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    malformed(e.what());
  }
  if (!doc.is_object()) malformed("top level must be an object");

  Manifest m;
  try {
    if (field(doc, "format").get<std::string>() != kManifestFormat) {
      malformed("unsupported format");
    }
    m.strategy = field(doc, "strategy").get<std::string>();
    m.descriptor = doc.value("descriptor", m.strategy);
    m.seed = field(doc, "seed").get<std::uint64_t>();
    m.budget = field(doc, "budget").get<std::size_t>();
    const auto& params = field(doc, "params");
    if (!params.is_object()) malformed("'params' must be an object");
    for (auto it = params.begin(); it != params.end(); ++it) {
      m.params.emplace_back(it.key(), param_text(it.value()));
    }
    for (const auto& id : field(doc, "selected_ids")) {
      m.selected_ids.push_back(id.get<std::string>());
    }
    for (const auto& row : field(doc, "per_task")) {
      ManifestTask t;
      t.task = field(row, "task").get<std::string>();
      t.available = field(row, "available").get<std::size_t>();
      t.count = field(row, "count").get<std::size_t>();
      if (row.contains("alpha")) t.alpha = row["alpha"].get<double>();
      if (row.contains("alpha_ceil")) t.alpha_ceil = row["alpha_ceil"].get<std::size_t>();
      if (row.contains("conf_t")) t.conf_t = row["conf_t"].get<double>();
      m.per_task.push_back(std::move(t));
    }
    if (doc.contains("objective_trace")) {
      m.objective_trace = doc["objective_trace"].get<std::vector<double>>();
    }
    m.partial = doc.value("partial", false);
    m.warnings = doc.value("warnings", std::vector<std::string>{});
  } catch (const ordered_json::exception& e) {
    malformed(e.what());
  }

  std::size_t total = 0;
  for (const auto& t : m.per_task) {
    if (t.count > t.available) malformed("task '" + t.task + "' count exceeds available");
    total += t.count;
  }
  if (total != m.selected_ids.size()) {
    malformed("per_task counts sum to " + std::to_string(total) + " but " +
              std::to_string(m.selected_ids.size()) + " ids are selected");
  }
  return m;
}

std::string format_report(const Manifest& m) {
  std::ostringstream os;
  os << "strategy:  " << m.descriptor << "\n";
  os << "budget:    " << m.budget << "\n";
  os << "seed:      " << m.seed << "\n";
  os << "selected:  " << m.selected_ids.size() << "\n";
  for (const auto& [key, value] : m.params) {
    if (key == "budget" || key == "seed") continue;
    os << "  " << key << " = " << value << "\n";
  }

  std::vector<const ManifestTask*> rows;
  for (const auto& t : m.per_task) rows.push_back(&t);
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    if (a->count != b->count) return a->count > b->count;
    return a->task < b->task;
  });

  const bool with_alpha = std::any_of(rows.begin(), rows.end(),
                                      [](const auto* t) { return t->alpha.has_value(); });
  const bool with_conf = std::any_of(rows.begin(), rows.end(),
                                     [](const auto* t) { return t->conf_t.has_value(); });
  std::size_t width = 5;
  for (const auto* t : rows) width = std::max(width, t->task.size());

  os << "\ntask" << std::string(width + 2 - 4, ' ')
     << "   count  available";
  if (with_alpha) os << "       alpha";
  if (with_conf) os << "      conf_t";
  os << "\n";
  for (const auto* t : rows) {
    os << t->task << std::string(width - t->task.size() + 2, ' ');
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%8zu %10zu", t->count, t->available);
    os << buf;
    if (with_alpha) {
      std::snprintf(buf, sizeof(buf), " %11s", t->alpha ? fixed(*t->alpha, 3).c_str() : "-");
      os << buf;
    }
    if (with_conf) {
      std::snprintf(buf, sizeof(buf), " %11s", t->conf_t ? fixed(*t->conf_t, 6).c_str() : "-");
      os << buf;
    }
    os << "\n";
  }
  const std::size_t total = std::accumulate(
      rows.begin(), rows.end(), std::size_t{0},
      [](std::size_t s, const auto* t) { return s + t->count; });
  os << "total" << std::string(width + 2 - 5, ' ');
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%8zu", total);
  os << buf << "\n";

  if (m.objective_trace && !m.objective_trace->empty()) {
    const auto& tr = *m.objective_trace;
    os << "\nobjective trace: steps=" << tr.size() << " first=" << tr.front()
       << " last=" << tr.back() << "\n";
  }
  if (m.partial) os << "\npartial selection\n";
  if (!m.warnings.empty()) {
    os << "\nwarnings:\n";
    for (const auto& w : m.warnings) os << "  - " << w << "\n";
  }
  return os.str();
}

}  // namespace tasksel
