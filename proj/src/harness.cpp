#include "oic/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace oic {

using nlohmann::json;

namespace {

[[noreturn]] void config_fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

Index positive_int(const json& v, const std::string& path, Index min) {
  if (!v.is_number_integer()) config_fail(path, "expected an integer");
  const auto x = v.get<long long>();
  if (x < min) config_fail(path, "must be at least " + std::to_string(min));
  return static_cast<Index>(x);
}

std::vector<Index> int_list(const json& v, const std::string& path, Index min) {
  std::vector<Index> out;
  if (v.is_array()) {
    if (v.empty()) config_fail(path, "list must be nonempty");
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(positive_int(v[i], path + "[" + std::to_string(i) + "]", min));
  } else {
    out.push_back(positive_int(v, path, min));
  }
  return out;
}

const std::set<std::string>& evaluator_names() {
  static const std::set<std::string> names = {"em",   "oic",       "oic_smoothed", "kfold", "bc_kfold", "loocv",
                                              "alo",  "bootstrap", "jackknife",    "poic",  "misspec"};
  return names;
}

EvaluatorSpec parse_evaluator(const json& v, const std::string& path) {
  EvaluatorSpec e;
  if (v.is_string()) {
    e.name = v.get<std::string>();
  } else if (v.is_object()) {
    for (const auto& [key, val] : v.items()) {
      const std::string p = path + "." + key;
      if (key == "name") {
        if (!val.is_string()) config_fail(p, "expected a string");
        e.name = val.get<std::string>();
      } else if (key == "label") {
        if (!val.is_string()) config_fail(p, "expected a string");
        e.label = val.get<std::string>();
      } else if (key == "K") {
        e.k = positive_int(val, p, 2);
      } else if (key == "B") {
        e.b = positive_int(val, p, 1);
      } else if (key == "m") {
        if (!val.is_number() || !(val.get<double>() > 0.0)) config_fail(p, "expected a positive number");
        e.m = val.get<double>();
      } else {
        config_fail(p, "unknown field");
      }
    }
    if (e.name.empty()) config_fail(path + ".name", "missing");
  } else {
    config_fail(path, "expected a string or an object");
  }
  if (!evaluator_names().count(e.name)) config_fail(path + ".name", "unknown evaluator '" + e.name + "'");
  if (e.label.empty()) {
    e.label = e.name;
    if (e.name == "kfold" || e.name == "bc_kfold") e.label += std::to_string(e.k);
    if (e.name == "bootstrap") e.label += std::to_string(e.b);
    if (e.name == "oic_smoothed") e.label += format_number(e.m);
  }
  return e;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

double rounded(double v) {
  const std::string s = format_number(v);
  double out = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Cell {
  Index n = 0;
  Index d_cfg = 0;
  ProblemInstance inst;
  std::vector<const ProblemPipeline*> pipes;
};

bool supported(const EvaluatorSpec& e, const ProblemPipeline& p) {
  if (e.name == "oic") return static_cast<bool>(p.oic) || static_cast<bool>(p.influence);
  if (e.name == "alo") return static_cast<bool>(p.influence);
  if (e.name == "poic" || e.name == "misspec") return static_cast<bool>(p.poic);
  if (e.name == "oic_smoothed") return static_cast<bool>(p.smoothed_oic);
  return true;
}

struct RepSeeds {
  std::uint64_t data, oracle, folds, boot;
};

double evaluate(const EvaluatorSpec& e, const ProblemPipeline& p, const FittedPolicy& policy, const Dataset& data,
                const RepSeeds& s) {
  const Pipeline& pl = p.pipeline;
  if (e.name == "em") return evaluate_empirical(policy, pl.cost, data);
  if (e.name == "oic") return pipeline_oic(p, policy, data).a_hat;
  if (e.name == "oic_smoothed") return p.smoothed_oic(policy, data, e.m).a_hat;
  if (e.name == "kfold") return kfold_cv(pl, data, e.k, s.folds);
  if (e.name == "bc_kfold") return bc_kfold_cv(pl, data, e.k, s.folds);
  if (e.name == "loocv") return loocv(pl, data);
  if (e.name == "alo") return pipeline_alo(p, policy, data);
  if (e.name == "bootstrap") return bootstrap_debias(pl, data, e.b, s.boot).estimate;
  if (e.name == "jackknife") return jackknife_debias(pl, data);
  if (e.name == "poic") return p.poic(policy, data).a_p;
  if (e.name == "misspec") return misspecification_error(pipeline_oic(p, policy, data), p.poic(policy, data).a_p);
  throw InvalidArgument("unknown evaluator " + e.name);
}

std::vector<Cell> build_cells(const ExperimentConfig& cfg) {
  const ProblemEntry& entry = find_problem(cfg.problem);
  std::vector<Cell> cells;
  for (Index d : cfg.d_xi)
    for (Index n : cfg.n) {
      Cell c;
      c.n = n;
      c.d_cfg = d;
      c.inst = entry.build(cfg.params, n, d, derive_seed(cfg.seed, "instance", d));
      if (cfg.pipelines.empty()) {
        for (const auto& p : c.inst.pipelines) c.pipes.push_back(&p);
      } else {
        for (const auto& label : cfg.pipelines) c.pipes.push_back(&c.inst.pipeline(label));
      }
      cells.push_back(std::move(c));
    }
  return cells;
}

struct TaskOutput {
  std::vector<ResultRow> rows;
  std::vector<std::pair<std::string, Index>> failures;
};

template <class Task>
std::vector<TaskOutput> run_parallel(std::size_t count, unsigned jobs, Task task) {
  std::vector<TaskOutput> out(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

ExperimentResult gather(std::vector<TaskOutput> parts, const ExperimentConfig& cfg, const std::vector<Cell>& cells) {
  ExperimentResult res;
  for (auto& p : parts) {
    res.rows.insert(res.rows.end(), p.rows.begin(), p.rows.end());
    res.failures.insert(res.failures.end(), p.failures.begin(), p.failures.end());
  }
  std::sort(res.rows.begin(), res.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.rep, a.pipeline, a.evaluator, a.n, a.d_xi) <
           std::tie(b.rep, b.pipeline, b.evaluator, b.n, b.d_xi);
  });
  std::sort(res.failures.begin(), res.failures.end());
  std::map<std::string, std::vector<Index>> by_key;
  for (const auto& [key, rep] : res.failures) by_key[key].push_back(rep);
  for (const auto& [key, reps] : by_key) {
    if (static_cast<double>(reps.size()) > 0.05 * static_cast<double>(cfg.replications * cells.size())) {
      std::string list;
      for (Index r : reps) list += (list.empty() ? "" : ",") + std::to_string(r);
      throw FitFailure(key + " failed in replications [" + list + "]");
    }
  }
  res.summary = summarize(res.rows);
  json meta;
  meta["problem"] = cfg.problem;
  meta["params"] = cfg.params;
  meta["seed"] = cfg.seed;
  meta["replications"] = cfg.replications;
  meta["oracle_m"] = cfg.oracle_m;
  json inst = json::array();
  for (const auto& c : cells) {
    json e;
    e["n"] = c.n;
    e["d_xi"] = c.inst.dim_xi;
    json p = json::object();
    for (const auto& [k, v] : c.inst.params) p[k] = v;
    e["instance_params"] = p;
    inst.push_back(e);
  }
  meta["cells"] = inst;
  json fails = json::array();
  for (const auto& [key, rep] : res.failures) fails.push_back({{"what", key}, {"rep", rep}});
  meta["failures"] = fails;
  res.metadata = meta;
  return res;
}

RepSeeds seeds_for(const ExperimentConfig& cfg, const Cell& c, Index rep) {
  return {derive_seed(cfg.seed, "data", c.n, c.d_cfg, rep), derive_seed(cfg.seed, "oracle", c.n, c.d_cfg, rep),
          derive_seed(cfg.seed, "folds", c.n, c.d_cfg, rep), derive_seed(cfg.seed, "boot", c.n, c.d_cfg, rep)};
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) config_fail("$", "config must be a JSON object");
  ExperimentConfig cfg;
  bool has_seed = false, has_n = false, has_reps = false, has_eval = false;
  for (const auto& [key, v] : j.items()) {
    const std::string path = "$." + key;
    if (key == "description") continue;
    if (key == "problem") {
      if (v.is_string()) {
        cfg.problem = v.get<std::string>();
      } else if (v.is_object()) {
        for (const auto& [k2, v2] : v.items()) {
          if (k2 == "name") {
            if (!v2.is_string()) config_fail(path + ".name", "expected a string");
            cfg.problem = v2.get<std::string>();
          } else if (k2 == "params") {
            if (!v2.is_object()) config_fail(path + ".params", "expected an object");
            cfg.params = v2;
          } else {
            config_fail(path + "." + k2, "unknown field");
          }
        }
      } else {
        config_fail(path, "expected a string or an object");
      }
    } else if (key == "n") {
      cfg.n = int_list(v, path, 2);
      has_n = true;
    } else if (key == "d_xi") {
      cfg.d_xi = int_list(v, path, 0);
    } else if (key == "replications") {
      cfg.replications = positive_int(v, path, 1);
      has_reps = true;
    } else if (key == "pipelines") {
      if (!v.is_array() || v.empty()) config_fail(path, "expected a nonempty list of labels");
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) config_fail(path + "[" + std::to_string(i) + "]", "expected a string");
        cfg.pipelines.push_back(v[i].get<std::string>());
      }
    } else if (key == "evaluators") {
      if (!v.is_array() || v.empty()) config_fail(path, "expected a nonempty list");
      for (std::size_t i = 0; i < v.size(); ++i)
        cfg.evaluators.push_back(parse_evaluator(v[i], path + "[" + std::to_string(i) + "]"));
      has_eval = true;
    } else if (key == "oracle") {
      if (!v.is_object()) config_fail(path, "expected an object");
      for (const auto& [k2, v2] : v.items()) {
        if (k2 != "m") config_fail(path + "." + k2, "unknown field");
        cfg.oracle_m = positive_int(v2, path + ".m", 2);
      }
    } else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        config_fail(path, "expected a non-negative integer");
      cfg.seed = v.get<std::uint64_t>();
      has_seed = true;
    } else if (key == "output") {
      if (!v.is_object()) config_fail(path, "expected an object");
      for (const auto& [k2, v2] : v.items()) {
        const std::string p2 = path + "." + k2;
        if (k2 == "path") {
          if (!v2.is_string()) config_fail(p2, "expected a string");
          cfg.output_path = v2.get<std::string>();
        } else if (k2 == "format") {
          if (!v2.is_string()) config_fail(p2, "expected a string");
          cfg.format = v2.get<std::string>();
          if (cfg.format != "csv" && cfg.format != "json") config_fail(p2, "format must be csv or json");
        } else if (k2 == "extended") {
          if (!v2.is_boolean()) config_fail(p2, "expected a boolean");
          cfg.extended = v2.get<bool>();
        } else {
          config_fail(p2, "unknown field");
        }
      }
    } else if (key == "record_timing") {
      if (!v.is_boolean()) config_fail(path, "expected a boolean");
      cfg.record_timing = v.get<bool>();
    } else {
      config_fail(path, "unknown field");
    }
  }
  if (cfg.problem.empty()) config_fail("$.problem", "missing");
  if (!has_n) config_fail("$.n", "missing");
  if (!has_reps) config_fail("$.replications", "missing");
  if (!has_eval) config_fail("$.evaluators", "missing");
  if (!has_seed) config_fail("$.seed", "missing (wall-clock seeding is not supported)");
  try {
    find_problem(cfg.problem);
  } catch (const InvalidArgument& e) {
    config_fail("$.problem.name", e.what());
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < cfg.evaluators.size(); ++i)
    if (!labels.insert(cfg.evaluators[i].label).second)
      config_fail("$.evaluators[" + std::to_string(i) + "]", "duplicate label '" + cfg.evaluators[i].label + "'");
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_fail("$", std::string("invalid JSON: ") + e.what());
  }
  return from_json(j);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs) {
  const std::vector<Cell> cells = build_cells(cfg);
  const std::size_t reps = static_cast<std::size_t>(cfg.replications);
  auto task = [&](std::size_t t) {
    const Cell& c = cells[t / reps];
    const Index rep = static_cast<Index>(t % reps);
    const RepSeeds s = seeds_for(cfg, c, rep);
    TaskOutput out;
    const Dataset data = c.inst.draw(s.data, c.n);
    for (const ProblemPipeline* p : c.pipes) {
      auto t0 = Clock::now();
      FittedPolicy policy;
      try {
        policy = p->pipeline.fit(data);
      } catch (const Error&) {
        out.failures.emplace_back(p->label(), rep);
        continue;
      }
      const double fit_s = seconds_since(t0);
      t0 = Clock::now();
      const Estimate truth = c.inst.oracle(policy, p->pipeline.cost, data, s.data, s.oracle, cfg.oracle_m);
      const double oracle_s = seconds_since(t0);
      for (const auto& e : cfg.evaluators) {
        if (!supported(e, *p)) continue;
        t0 = Clock::now();
        double value = 0.0;
        try {
          value = evaluate(e, *p, policy, data, s);
        } catch (const Error&) {
          out.failures.emplace_back(p->label() + "/" + e.label, rep);
          continue;
        }
        const double eval_s = seconds_since(t0);
        if (!std::isfinite(value)) {
          out.failures.emplace_back(p->label() + "/" + e.label, rep);
          continue;
        }
        ResultRow r;
        r.problem = c.inst.name;
        r.pipeline = p->label();
        r.evaluator = e.label;
        r.n = c.n;
        r.d_xi = c.inst.dim_xi;
        r.rep = rep;
        r.a_hat = value;
        r.a_oracle = truth.mean;
        r.seed = s.data;
        if (cfg.record_timing) {
          r.seconds = fit_s + eval_s;
          r.fit_seconds = fit_s;
          r.eval_seconds = eval_s;
          r.oracle_seconds = oracle_s;
        }
        out.rows.push_back(std::move(r));
      }
    }
    return out;
  };
  return gather(run_parallel(cells.size() * reps, jobs, task), cfg, cells);
}

ExperimentResult run_oracle(const ExperimentConfig& cfg, unsigned jobs) {
  const std::vector<Cell> cells = build_cells(cfg);
  const std::size_t reps = static_cast<std::size_t>(cfg.replications);
  auto task = [&](std::size_t t) {
    const Cell& c = cells[t / reps];
    const Index rep = static_cast<Index>(t % reps);
    const RepSeeds s = seeds_for(cfg, c, rep);
    TaskOutput out;
    const Dataset data = c.inst.draw(s.data, c.n);
    for (const ProblemPipeline* p : c.pipes) {
      auto t0 = Clock::now();
      FittedPolicy policy;
      try {
        policy = p->pipeline.fit(data);
      } catch (const Error&) {
        out.failures.emplace_back(p->label(), rep);
        continue;
      }
      const double fit_s = seconds_since(t0);
      t0 = Clock::now();
      const Estimate truth = c.inst.oracle(policy, p->pipeline.cost, data, s.data, s.oracle, cfg.oracle_m);
      ResultRow r;
      r.problem = c.inst.name;
      r.pipeline = p->label();
      r.evaluator = "oracle";
      r.n = c.n;
      r.d_xi = c.inst.dim_xi;
      r.rep = rep;
      r.a_hat = truth.mean;
      r.a_oracle = truth.mean;
      r.seed = s.data;
      if (cfg.record_timing) {
        r.oracle_seconds = seconds_since(t0);
        r.fit_seconds = fit_s;
        r.seconds = fit_s + r.oracle_seconds;
      }
      out.rows.push_back(std::move(r));
    }
    return out;
  };
  return gather(run_parallel(cells.size() * reps, jobs, task), cfg, cells);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  struct Acc {
    std::vector<double> a, o, diff, secs;
  };
  std::map<std::tuple<Index, Index, std::string, std::string>, Acc> groups;
  for (const auto& r : rows) {
    auto& g = groups[{r.n, r.d_xi, r.pipeline, r.evaluator}];
    g.a.push_back(r.a_hat);
    g.o.push_back(r.a_oracle);
    g.diff.push_back(r.a_hat - r.a_oracle);
    g.secs.push_back(r.seconds);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, g] : groups) {
    SummaryRow s;
    std::tie(s.n, s.d_xi, s.pipeline, s.evaluator) = key;
    s.count = static_cast<Index>(g.a.size());
    s.mean_a_hat = mean_stderr(g.a).mean;
    s.mean_oracle = mean_stderr(g.o).mean;
    const Estimate d = mean_stderr(g.diff);
    s.bias = d.mean;
    s.stderr_ = d.se;
    s.mean_seconds = mean_stderr(g.secs).mean;
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) throw InvalidArgument("non-finite value in output");
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, r.ptr);
}

std::string to_csv(const std::vector<ResultRow>& rows, bool extended) {
  std::string out = "problem,pipeline,evaluator,n,d_xi,rep,a_hat,a_oracle,seconds,seed";
  if (extended) out += ",fit_seconds,eval_seconds,oracle_seconds";
  out += '\n';
  for (const auto& r : rows) {
    out += csv_field(r.problem) + ',' + csv_field(r.pipeline) + ',' + csv_field(r.evaluator) + ',' +
           std::to_string(r.n) + ',' + std::to_string(r.d_xi) + ',' + std::to_string(r.rep) + ',' +
           format_number(r.a_hat) + ',' + format_number(r.a_oracle) + ',' + format_number(r.seconds) + ',' +
           std::to_string(r.seed);
    if (extended)
      out += ',' + format_number(r.fit_seconds) + ',' + format_number(r.eval_seconds) + ',' +
             format_number(r.oracle_seconds);
    out += '\n';
  }
  return out;
}

std::string to_json(const std::vector<ResultRow>& rows, bool extended) {
  json arr = json::array();
  for (const auto& r : rows) {
    json o;
    o["problem"] = r.problem;
    o["pipeline"] = r.pipeline;
    o["evaluator"] = r.evaluator;
    o["n"] = r.n;
    o["d_xi"] = r.d_xi;
    o["rep"] = r.rep;
    o["a_hat"] = rounded(r.a_hat);
    o["a_oracle"] = rounded(r.a_oracle);
    o["seconds"] = rounded(r.seconds);
    o["seed"] = r.seed;
    if (extended) {
      o["fit_seconds"] = rounded(r.fit_seconds);
      o["eval_seconds"] = rounded(r.eval_seconds);
      o["oracle_seconds"] = rounded(r.oracle_seconds);
    }
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\n') {
      rec.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(rec));
      rec.clear();
      any = false;
    } else if (ch != '\r') {
      field += ch;
      any = true;
    }
  }
  if (any) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw InvalidDataset("missing CSV header");
  const auto& header = records.front();
  if (header.size() < 10 || header[0] != "problem" || header[9] != "seed") throw InvalidDataset("unexpected CSV header");
  auto num = [](const std::string& s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw InvalidDataset("cannot parse '" + s + "'");
    return v;
  };
  auto integer = [](const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw InvalidDataset("cannot parse '" + s + "'");
    return v;
  };
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i];
    if (f.size() != header.size()) throw InvalidDataset("row " + std::to_string(i) + ": field count");
    ResultRow r;
    r.problem = f[0];
    r.pipeline = f[1];
    r.evaluator = f[2];
    r.n = static_cast<Index>(integer(f[3]));
    r.d_xi = static_cast<Index>(integer(f[4]));
    r.rep = static_cast<Index>(integer(f[5]));
    r.a_hat = num(f[6]);
    r.a_oracle = num(f[7]);
    r.seconds = num(f[8]);
    r.seed = integer(f[9]);
    if (f.size() >= 13) {
      r.fit_seconds = num(f[10]);
      r.eval_seconds = num(f[11]);
      r.oracle_seconds = num(f[12]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit(const std::vector<ResultRow>& rows, const std::string& format, const std::string& path, bool extended) {
  std::string text;
  if (format == "csv") text = to_csv(rows, extended);
  else if (format == "json") text = to_json(rows, extended);
  else throw InvalidArgument("unknown output format '" + format + "'");
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

} // namespace oic
