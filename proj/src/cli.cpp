/*
 * Copyright 2026 The dispaudit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dispaudit/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dispaudit/bias.hpp"
#include "dispaudit/csv.hpp"
#include "dispaudit/domain.hpp"
#include "dispaudit/errors.hpp"
#include "dispaudit/estimators.hpp"
#include "dispaudit/ingest.hpp"
#include "dispaudit/proxy.hpp"
#include "dispaudit/simulate.hpp"
#include "dispaudit/stable_sum.hpp"
#include "dispaudit/version.hpp"

namespace dispaudit {

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

RunManifest RunManifest::make(const std::string& command,
                              const std::vector<std::string>& arguments,
                              const std::string& config_text) {
  RunManifest manifest;
  manifest.command = command;
  manifest.arguments = arguments;
  manifest.tool_version = kVersion;

  std::time_t stamp_time = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long value = std::strtoll(epoch, &end, 10);
    if (end != epoch && *end == '\0') {
      stamp_time = static_cast<std::time_t>(value);
    }
  }
  std::tm tm_utc{};
  gmtime_r(&stamp_time, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  manifest.timestamp = stamp;

  manifest.config_hash =
      config_text.empty() ? "none" : fnv1a_hex(config_text);
  std::string id_input = command;
  for (const std::string& arg : arguments) {
    id_input += '\n';
    id_input += arg;
  }
  id_input += '\n';
  id_input += manifest.config_hash;
  manifest.run_id = fnv1a_hex(id_input);
  return manifest;
}

namespace {

using Json = nlohmann::ordered_json;

Json manifest_json(const RunManifest& manifest) {
  Json j;
  j["command"] = manifest.command;
  j["arguments"] = manifest.arguments;
  j["tool_version"] = manifest.tool_version;
  j["timestamp"] = manifest.timestamp;
  j["config_hash"] = manifest.config_hash;
  j["run_id"] = manifest.run_id;
  return j;
}

void write_json_file(const std::string& path, const Json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

Json report_json(const IngestReport& report) {
  Json j;
  j["total"] = report.total;
  j["loaded"] = report.loaded;
  j["skipped"] = report.skipped;
  j["rejected"] = report.rejected;
  j["renormalized"] = report.renormalized;
  j["problems"] = report.problems;
  return j;
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) {
    return name;
  }
  if (dir.back() == '/') {
    return dir + name;
  }
  return dir + "/" + name;
}

// "lo:hi:count" inclusive linear grid, or a comma-separated value list.
std::vector<double> parse_grid(const std::string& text) {
  const auto bad = [&text]() {
    return ConfigError("grid '" + text +
                       "' must be lo:hi:count or a comma-separated list");
  };
  const std::size_t colon1 = text.find(':');
  if (colon1 != std::string::npos) {
    const std::size_t colon2 = text.find(':', colon1 + 1);
    if (colon2 == std::string::npos ||
        text.find(':', colon2 + 1) != std::string::npos) {
      throw bad();
    }
    const std::optional<double> lo = parse_double(text.substr(0, colon1));
    const std::optional<double> hi =
        parse_double(text.substr(colon1 + 1, colon2 - colon1 - 1));
    const std::string count_text = text.substr(colon2 + 1);
    char* end = nullptr;
    const long long count = std::strtoll(count_text.c_str(), &end, 10);
    if (!lo || !hi || end == count_text.c_str() || *end != '\0' ||
        count < 1) {
      throw bad();
    }
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
      grid.push_back(*lo);
      return grid;
    }
    for (long long i = 0; i < count; ++i) {
      grid.push_back(*lo + (*hi - *lo) * static_cast<double>(i) /
                               static_cast<double>(count - 1));
    }
    return grid;
  }
  std::vector<double> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string part =
        text.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    const std::optional<double> value = parse_double(part);
    if (!value) {
      throw bad();
    }
    grid.push_back(*value);
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return grid;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation (n-1) over sqrt(n)
};

MeanSe mean_se(const std::vector<double>& values) {
  MeanSe out;
  if (values.empty()) {
    return out;
  }
  StableSum sum;
  for (double v : values) {
    sum.add(v);
  }
  out.mean = sum.value() / static_cast<double>(values.size());
  if (values.size() < 2) {
    return out;
  }
  StableSum squares;
  for (double v : values) {
    squares.add((v - out.mean) * (v - out.mean));
  }
  const double n = static_cast<double>(values.size());
  out.se = std::sqrt(squares.value() / (n - 1.0)) / std::sqrt(n);
  return out;
}

struct EstimateBundle {
  std::optional<EstimateReport> true_label;
  std::optional<EstimateReport> weighted;
  std::vector<std::pair<double, std::optional<EstimateReport>>> thresholded;
  Json status = Json::object();  // estimator label -> "ok" or the error
  bool estimation_failed = false;
};

EstimateBundle compute_estimates(const Dataset& dataset,
                                 const std::vector<double>& qs,
                                 const std::string& adv, const std::string& dis,
                                 std::ostream& err) {
  EstimateBundle bundle;
  std::int64_t unlabeled = 0;
  for (const AuditRecord& record : dataset.records) {
    if (!record.true_class) {
      ++unlabeled;
    }
  }
  if (unlabeled > 0) {
    bundle.status["true_label"] = "skipped: " + std::to_string(unlabeled) +
                                  " records lack true labels";
  } else {
    try {
      bundle.true_label = true_label_estimate(dataset, adv, dis);
      bundle.status["true_label"] = "ok";
    } catch (const EstimationError& error) {
      bundle.status["true_label"] = error.what();
      bundle.estimation_failed = true;
      err << "true_label: " << error.what() << "\n";
    }
  }
  try {
    bundle.weighted = weighted_estimate(dataset, adv, dis);
    bundle.status["weighted"] = "ok";
  } catch (const EstimationError& error) {
    bundle.status["weighted"] = error.what();
    bundle.estimation_failed = true;
    err << "weighted: " << error.what() << "\n";
  }
  for (double q : qs) {
    const std::string label = "thresholded q=" + format_double(q);
    try {
      bundle.thresholded.emplace_back(
          q, thresholded_estimate(dataset, ThresholdPolicy(q), adv, dis));
      bundle.status[label] = "ok";
    } catch (const EstimationError& error) {
      bundle.thresholded.emplace_back(q, std::nullopt);
      bundle.status[label] = error.what();
      bundle.estimation_failed = true;
      err << label << ": " << error.what() << "\n";
    }
  }
  return bundle;
}

template <typename Fn>
void for_each_report(const EstimateBundle& bundle, Fn&& fn) {
  if (bundle.true_label) {
    fn(*bundle.true_label);
  }
  if (bundle.weighted) {
    fn(*bundle.weighted);
  }
  for (const auto& [q, report] : bundle.thresholded) {
    if (report) {
      fn(*report);
    }
  }
}

void write_means_csv(const std::string& path, const EstimateBundle& bundle) {
  CsvWriter w;
  w.row({"estimator", "q", "class", "mean_outcome", "classified_count"});
  for_each_report(bundle, [&w](const EstimateReport& report) {
    const std::string q = report.q ? format_double(*report.q) : "";
    const std::string name(estimator_kind_name(report.kind));
    for (const auto& [cls, mean] : report.per_class_mean) {
      w.row({name, q, cls, format_double(mean),
             std::to_string(report.classified_count.at(cls))});
    }
  });
  write_text_atomic(path, w.str());
}

void write_disparity_csv(const std::string& path, const EstimateBundle& bundle,
                         std::int64_t record_count) {
  CsvWriter w;
  w.row({"estimator", "q", "advantaged", "disadvantaged", "disparity",
         "unclassified_count", "unclassified_fraction"});
  for_each_report(bundle, [&w, record_count](const EstimateReport& report) {
    const std::string q = report.q ? format_double(*report.q) : "";
    const double fraction =
        record_count > 0 ? static_cast<double>(report.unclassified_count) /
                               static_cast<double>(record_count)
                         : 0.0;
    w.row({std::string(estimator_kind_name(report.kind)), q,
           report.advantaged, report.disadvantaged,
           format_double(report.disparity),
           std::to_string(report.unclassified_count),
           format_double(fraction)});
  });
  write_text_atomic(path, w.str());
}

void print_estimates(std::ostream& out, const EstimateBundle& bundle) {
  for_each_report(bundle, [&out](const EstimateReport& report) {
    out << estimator_kind_name(report.kind);
    if (report.q) {
      out << " q=" << format_double(*report.q);
    }
    out << ": disparity " << format_double(report.disparity) << " ("
        << report.advantaged << " "
        << format_double(report.per_class_mean.at(report.advantaged)) << ", "
        << report.disadvantaged << " "
        << format_double(report.per_class_mean.at(report.disadvantaged))
        << ")\n";
  });
}

struct FileIngest {
  Dataset dataset;
  Json ingest = Json::object();
};

FileIngest ingest_files(const std::string& records_path,
                        const std::string& composition_path,
                        const ColumnMap& map, bool strict, bool drop_unmatched,
                        std::ostream& out) {
  FileIngest fi;
  const LoadRecordsResult records = load_records(records_path, map, strict);
  const LoadCompositionResult composition =
      load_composition(composition_path, strict);
  AttachResult attach =
      attach_proxy(records.rows, composition.table, drop_unmatched);
  require_valid(attach.dataset);
  fi.dataset = std::move(attach.dataset);
  fi.ingest["records"] = report_json(records.report);
  fi.ingest["composition"] = report_json(composition.report);
  fi.ingest["attach"] = Json{{"dropped", attach.dropped}};
  out << "records: loaded " << records.report.loaded << " of "
      << records.report.total << " (" << records.report.skipped
      << " skipped, " << records.report.rejected << " rejected)\n";
  out << "composition: loaded " << composition.report.loaded << " of "
      << composition.report.total << " (" << composition.report.renormalized
      << " renormalized, " << composition.report.rejected << " rejected)\n";
  if (attach.dropped > 0) {
    out << "attach: dropped " << attach.dropped
        << " rows with unknown geography keys\n";
  }
  return fi;
}

void resolve_pair(const LabelUniverse& universe, std::string& adv,
                  std::string& dis) {
  if (adv.empty()) {
    adv = universe.label(0);
  }
  if (dis.empty()) {
    dis = universe.label(1);
  }
  universe.require(adv);
  universe.require(dis);
  if (adv == dis) {
    throw ConfigError(
        "advantaged and disadvantaged classes must differ, both are '" + adv +
        "'");
  }
}

void validate_thresholds(const std::vector<double>& qs) {
  for (double q : qs) {
    ThresholdPolicy validator(q);
    (void)validator;
  }
}

struct AuditArgs {
  std::string records;
  std::string composition;
  std::string config;
  std::string out_dir;
  std::string adv;
  std::string dis;
  std::vector<double> qs;
  bool strict = false;
  bool drop_unmatched = false;
};

int cmd_audit(const AuditArgs& a, const std::vector<std::string>& raw_args,
              std::ostream& out, std::ostream& err) {
  std::vector<double> qs = a.qs.empty() ? std::vector<double>{0.5} : a.qs;
  validate_thresholds(qs);

  std::string config_text;
  ColumnMap map = ColumnMap::hmda_default();
  if (!a.config.empty()) {
    try {
      config_text = read_text_file(a.config);
    } catch (const DataError& error) {
      throw ConfigError(std::string(error.what()));
    }
    map = ColumnMap::from_config_text(config_text);
  }
  const RunManifest manifest = RunManifest::make("audit", raw_args,
                                                 config_text);

  FileIngest fi = ingest_files(a.records, a.composition, map, a.strict,
                               a.drop_unmatched, out);
  std::string adv = a.adv;
  std::string dis = a.dis;
  resolve_pair(fi.dataset.universe, adv, dis);

  const EstimateBundle bundle =
      compute_estimates(fi.dataset, qs, adv, dis, err);
  write_means_csv(join_path(a.out_dir, "means.csv"), bundle);
  write_disparity_csv(join_path(a.out_dir, "disparity.csv"), bundle,
                      static_cast<std::int64_t>(fi.dataset.records.size()));

  Json m = manifest_json(manifest);
  m["universe"] = fi.dataset.universe.labels();
  m["advantaged"] = adv;
  m["disadvantaged"] = dis;
  m["record_count"] = fi.dataset.records.size();
  m["ingest"] = fi.ingest;
  m["estimators"] = bundle.status;
  write_json_file(join_path(a.out_dir, "manifest.json"), m);

  print_estimates(out, bundle);
  return bundle.estimation_failed ? 3 : 0;
}

struct DecomposeArgs {
  std::string records;
  std::string composition;
  std::string config;
  std::string toy;
  std::string out_dir;
  std::string adv;
  std::string dis;
  std::vector<double> qs;
  bool strict = false;
  bool drop_unmatched = false;
};

int cmd_decompose(const DecomposeArgs& a,
                  const std::vector<std::string>& raw_args, std::ostream& out,
                  std::ostream& err) {
  std::vector<double> qs = a.qs.empty() ? std::vector<double>{0.5} : a.qs;
  validate_thresholds(qs);

  std::string config_text;
  Dataset dataset;
  Json ingest = Json::object();
  if (!a.toy.empty()) {
    if (!a.records.empty() || !a.composition.empty() || !a.config.empty()) {
      throw ConfigError("--toy replaces --records/--composition/--config");
    }
    dataset = toy_population(a.toy == "toy1" ? ToyPopulation::toy1
                                             : ToyPopulation::toy2);
    ingest["source"] = "toy:" + a.toy;
  } else {
    if (a.records.empty() || a.composition.empty()) {
      throw ConfigError(
          "decompose needs --records and --composition, or --toy");
    }
    ColumnMap map = ColumnMap::hmda_default();
    if (!a.config.empty()) {
      try {
        config_text = read_text_file(a.config);
      } catch (const DataError& error) {
        throw ConfigError(std::string(error.what()));
      }
      map = ColumnMap::from_config_text(config_text);
    }
    FileIngest fi = ingest_files(a.records, a.composition, map, a.strict,
                                 a.drop_unmatched, out);
    dataset = std::move(fi.dataset);
    ingest = std::move(fi.ingest);
  }
  const RunManifest manifest =
      RunManifest::make("decompose", raw_args, config_text);

  std::string adv = a.adv;
  std::string dis = a.dis;
  resolve_pair(dataset.universe, adv, dis);
  const bool multiclass = dataset.universe.size() > 2;
  bool failed = false;

  Json doc;
  doc["run_id"] = manifest.run_id;
  doc["universe"] = dataset.universe.labels();
  doc["advantaged"] = adv;
  doc["disadvantaged"] = dis;
  doc["multiclass"] = multiclass;
  doc["record_count"] = dataset.records.size();

  const std::pair<std::string, std::string> pairs[2] = {{adv, dis},
                                                        {dis, adv}};
  CsvWriter series;
  series.row({"q", "observed_bias", "theoretical_bias"});
  Json thresholds = Json::array();
  for (double q : qs) {
    const ThresholdPolicy policy(q);
    Json entry;
    entry["q"] = q;

    Json groups = Json::array();
    for (const auto& [group, counterpart] : pairs) {
      Json gj;
      gj["group"] = group;
      gj["counterpart"] = counterpart;
      try {
        const BiasDecomposition d =
            thresholded_bias_theoretical(dataset, policy, group, counterpart);
        gj["delta1"] = d.delta1;
        gj["delta2"] = d.delta2;
        gj["c1"] = d.c1;
        gj["c2"] = d.c2;
        gj["c3"] = d.c3;
        gj["theoretical_bias"] = d.theoretical_bias;
        gj["observed_bias"] = d.observed_bias;
      } catch (const EstimationError& error) {
        gj["error"] = error.what();
        failed = true;
        err << "q=" << format_double(q) << " group '" << group
            << "': " << error.what() << "\n";
      }
      groups.push_back(gj);
    }
    entry["groups"] = groups;

    try {
      const ConditionReport report = check_conditions(dataset, policy, adv,
                                                      dis);
      Json cj;
      cj["values"] = report.values;
      cj["holds"] = report.holds;
      cj["holds_primed"] = report.holds_primed;
      cj["predicted"] = std::string(bias_direction_name(report.predicted));
      entry["conditions"] = cj;
    } catch (const EstimationError& error) {
      entry["conditions"] = Json{{"error", error.what()}};
      failed = true;
    }

    Json orderings = Json::array();
    for (const auto& [group, counterpart] : pairs) {
      Json oj;
      oj["group"] = group;
      oj["counterpart"] = counterpart;
      try {
        const COrderingReport r =
            check_c_orderings(dataset, policy, group, counterpart, multiclass);
        oj["c1"] = r.c.c1;
        oj["c2"] = r.c.c2;
        oj["c3"] = r.c.c3;
        oj["posterior_own"] = r.posterior_own;
        oj["posterior_counterpart"] = r.posterior_counterpart;
        oj["assigned_given_true"] = r.assigned_given_true;
        oj["prob_true"] = r.prob_true;
        oj["prob_assigned"] = r.prob_assigned;
        oj["other_mass_assigned"] = r.other_mass_assigned;
        oj["posterior_condition"] = r.posterior_condition;
        oj["prior_condition"] = r.prior_condition;
        oj["c2_gt_c3"] = r.c2_gt_c3;
        oj["c2_gt_c1"] = r.c2_gt_c1;
        oj["c1_gt_c3"] = r.c1_gt_c3;
        oj["identity_lhs"] = r.identity_lhs;
        oj["identity_rhs"] = r.identity_rhs;
      } catch (const EstimationError& error) {
        oj["error"] = error.what();
        failed = true;
      }
      orderings.push_back(oj);
    }
    entry["orderings"] = orderings;

    try {
      const std::vector<BiasSeriesPoint> points =
          theoretical_vs_observed(dataset, {policy}, adv, dis);
      series.row({format_double(q), format_double(points[0].observed),
                  format_double(points[0].theoretical)});
      entry["series"] = Json{{"observed", points[0].observed},
                             {"theoretical", points[0].theoretical}};
      std::string predicted = "unavailable";
      if (entry["conditions"].contains("predicted")) {
        predicted = entry["conditions"]["predicted"].get<std::string>();
      }
      out << "q=" << format_double(q) << ": observed disparity bias "
          << format_double(points[0].observed) << ", theoretical "
          << format_double(points[0].theoretical) << ", predicted "
          << predicted << "\n";
    } catch (const EstimationError& error) {
      entry["series"] = Json{{"error", error.what()}};
      failed = true;
      out << "q=" << format_double(q)
          << ": disparity bias unavailable (see decomposition.json)\n";
    }
    thresholds.push_back(entry);
  }
  doc["thresholds"] = thresholds;

  try {
    const std::map<std::string, double> means = true_group_means(dataset);
    const EstimateReport weighted = weighted_estimate(dataset, adv, dis);
    Json wj;
    for (const auto& [group, counterpart] : pairs) {
      (void)counterpart;
      wj[group] =
          Json{{"theoretical_bias", weighted_bias_theoretical(dataset, group)},
               {"observed_bias",
                weighted.per_class_mean.at(group) - means.at(group)}};
    }
    doc["weighted"] = wj;
  } catch (const EstimationError& error) {
    doc["weighted"] = Json{{"error", error.what()}};
    failed = true;
    err << "weighted: " << error.what() << "\n";
  }

  try {
    const CovarianceQuadrants quadrants =
        covariance_quadrants(dataset, adv, dis);
    doc["covariance_quadrants"] = Json{{"pos_pos", quadrants.pos_pos},
                                       {"pos_neg", quadrants.pos_neg},
                                       {"neg_pos", quadrants.neg_pos},
                                       {"neg_neg", quadrants.neg_neg},
                                       {"boundary", quadrants.boundary}};
  } catch (const EstimationError& error) {
    doc["covariance_quadrants"] = Json{{"error", error.what()}};
    failed = true;
    err << "covariance quadrants: " << error.what() << "\n";
  }

  write_json_file(join_path(a.out_dir, "decomposition.json"), doc);
  write_text_atomic(join_path(a.out_dir, "bias_series.csv"), series.str());

  Json m = manifest_json(manifest);
  m["universe"] = dataset.universe.labels();
  m["advantaged"] = adv;
  m["disadvantaged"] = dis;
  m["record_count"] = dataset.records.size();
  m["ingest"] = ingest;
  write_json_file(join_path(a.out_dir, "manifest.json"), m);

  return failed ? 3 : 0;
}

struct SimulateArgs {
  std::string kind;
  std::string out_dir;
  std::string d_grid;
  std::string lambda_grid;
  std::vector<double> qs;
  std::uint64_t seed = 0;
  int reps = 30;
  std::int64_t n = 100000;
  bool derandomized = false;
};

int simulate_toy(const SimulateArgs& a, const RunManifest& manifest,
                 std::ostream& out, std::ostream& err) {
  const std::vector<double> qs =
      a.qs.empty() ? std::vector<double>{0.5} : a.qs;
  validate_thresholds(qs);
  const Dataset dataset = toy_population(
      a.kind == "toy1" ? ToyPopulation::toy1 : ToyPopulation::toy2);
  const EstimateBundle bundle =
      compute_estimates(dataset, qs, "a", "b", err);
  write_means_csv(join_path(a.out_dir, "means.csv"), bundle);
  write_disparity_csv(join_path(a.out_dir, "disparity.csv"), bundle,
                      static_cast<std::int64_t>(dataset.records.size()));
  Json m = manifest_json(manifest);
  m["kind"] = a.kind;
  m["universe"] = dataset.universe.labels();
  m["record_count"] = dataset.records.size();
  m["estimators"] = bundle.status;
  write_json_file(join_path(a.out_dir, "manifest.json"), m);
  print_estimates(out, bundle);
  return bundle.estimation_failed ? 3 : 0;
}

int simulate_sweep(const SimulateArgs& a, const RunManifest& manifest,
                   std::ostream& out) {
  const bool intra = a.kind == "intra";
  if (intra && !a.lambda_grid.empty()) {
    throw ConfigError("--lambda-grid applies to inter sweeps only");
  }
  if (!intra && !a.d_grid.empty()) {
    throw ConfigError("--d-grid applies to intra sweeps only");
  }
  if (a.qs.size() > 1) {
    throw ConfigError("sweeps use exactly one --q");
  }
  SweepConfig config;
  config.kind = intra ? SweepKind::intra : SweepKind::inter;
  if (intra) {
    config.grid = a.d_grid.empty()
                      ? std::vector<double>{-0.5, -0.25, 0.0, 0.25, 0.5}
                      : parse_grid(a.d_grid);
  } else {
    config.grid = a.lambda_grid.empty()
                      ? std::vector<double>{0.2, 0.65, 1.1, 1.55, 2.0}
                      : parse_grid(a.lambda_grid);
  }
  config.reps = a.reps;
  config.q = a.qs.empty() ? 0.75 : a.qs.front();
  validate_thresholds({config.q});
  config.seed = a.seed;
  config.derandomized = a.derandomized;

  const std::vector<SweepResult> results = sweep(config);
  const std::string grid_col = intra ? "d" : "lambda";

  CsvWriter rows;
  rows.row({grid_col, "rep", "seed", "delta_true", "delta_thresholded",
            "delta_weighted", "delta1_adv", "delta1_dis", "delta2_adv",
            "delta2_dis"});
  for (const SweepResult& result : results) {
    for (const SweepRow& row : result.rows) {
      rows.row({format_double(result.grid_value), std::to_string(row.rep),
                std::to_string(row.seed), format_double(row.delta_true),
                format_double(row.delta_thresholded),
                format_double(row.delta_weighted),
                format_double(row.delta1_adv), format_double(row.delta1_dis),
                format_double(row.delta2_adv),
                format_double(row.delta2_dis)});
    }
  }
  write_text_atomic(join_path(a.out_dir, "sweep.csv"), rows.str());

  CsvWriter summary;
  const std::vector<std::string> metrics = {
      "delta_true",      "delta_thresholded", "delta_weighted",
      "bias_thresholded", "bias_weighted",     "delta1_adv",
      "delta1_dis",      "delta2_adv",        "delta2_dis"};
  std::vector<std::string> header = {grid_col, "reps"};
  for (const std::string& metric : metrics) {
    header.push_back("mean_" + metric);
    header.push_back("se_" + metric);
  }
  summary.row(header);
  for (const SweepResult& result : results) {
    std::map<std::string, std::vector<double>> columns;
    for (const SweepRow& row : result.rows) {
      columns["delta_true"].push_back(row.delta_true);
      columns["delta_thresholded"].push_back(row.delta_thresholded);
      columns["delta_weighted"].push_back(row.delta_weighted);
      columns["bias_thresholded"].push_back(row.delta_thresholded -
                                            row.delta_true);
      columns["bias_weighted"].push_back(row.delta_weighted - row.delta_true);
      columns["delta1_adv"].push_back(row.delta1_adv);
      columns["delta1_dis"].push_back(row.delta1_dis);
      columns["delta2_adv"].push_back(row.delta2_adv);
      columns["delta2_dis"].push_back(row.delta2_dis);
    }
    std::vector<std::string> line = {format_double(result.grid_value),
                                     std::to_string(result.rows.size())};
    MeanSe bias_thresholded;
    MeanSe bias_weighted;
    for (const std::string& metric : metrics) {
      const MeanSe stats = mean_se(columns[metric]);
      if (metric == "bias_thresholded") {
        bias_thresholded = stats;
      }
      if (metric == "bias_weighted") {
        bias_weighted = stats;
      }
      line.push_back(format_double(stats.mean));
      line.push_back(format_double(stats.se));
    }
    summary.row(line);
    out << grid_col << "=" << format_double(result.grid_value)
        << ": thresholded bias " << format_double(bias_thresholded.mean)
        << " (se " << format_double(bias_thresholded.se)
        << "), weighted bias " << format_double(bias_weighted.mean)
        << " (se " << format_double(bias_weighted.se) << ")\n";
  }
  write_text_atomic(join_path(a.out_dir, "summary.csv"), summary.str());

  Json m = manifest_json(manifest);
  m["kind"] = a.kind;
  m["grid"] = config.grid;
  m["reps"] = config.reps;
  m["q"] = config.q;
  m["seed"] = config.seed;
  m["derandomized"] = config.derandomized;
  write_json_file(join_path(a.out_dir, "manifest.json"), m);
  return 0;
}

int simulate_semisynth(const SimulateArgs& a, const RunManifest& manifest,
                       std::ostream& out, std::ostream& err) {
  const std::vector<double> qs =
      a.qs.empty() ? std::vector<double>{0.5} : a.qs;
  validate_thresholds(qs);
  const SyntheticIncomes incomes = synthetic_incomes(a.n, a.seed);
  const SemisyntheticResult semi =
      semisynthetic_decile(incomes.incomes, incomes.labels, incomes.universe,
                           a.seed, a.derandomized);
  if (semi.distinct_deciles < 10) {
    err << "warning: only " << semi.distinct_deciles
        << " distinct income deciles (ties collapsed buckets)\n";
  }
  const EstimateBundle bundle =
      compute_estimates(semi.dataset, qs, "a", "b", err);
  write_disparity_csv(join_path(a.out_dir, "semisynth.csv"), bundle,
                      static_cast<std::int64_t>(semi.dataset.records.size()));

  struct DecileAgg {
    std::int64_t n = 0;
    StableSum outcome;
    std::vector<std::int64_t> by_class;
  };
  std::map<std::string, DecileAgg> deciles;
  const std::size_t width = semi.dataset.universe.size();
  for (const AuditRecord& record : semi.dataset.records) {
    DecileAgg& agg = deciles[*record.proxy_key];
    if (agg.by_class.empty()) {
      agg.by_class.resize(width, 0);
    }
    ++agg.n;
    agg.outcome.add(record.outcome);
    ++agg.by_class[*record.true_class];
  }
  CsvWriter decile_rows;
  std::vector<std::string> header = {"decile", "records", "mean_outcome"};
  for (const std::string& label : semi.dataset.universe.labels()) {
    header.push_back("share_" + label);
  }
  decile_rows.row(header);
  for (const auto& [key, agg] : deciles) {
    std::vector<std::string> line = {
        key, std::to_string(agg.n),
        format_double(agg.outcome.value() / static_cast<double>(agg.n))};
    for (std::size_t c = 0; c < width; ++c) {
      line.push_back(format_double(static_cast<double>(agg.by_class[c]) /
                                   static_cast<double>(agg.n)));
    }
    decile_rows.row(line);
  }
  write_text_atomic(join_path(a.out_dir, "deciles.csv"), decile_rows.str());

  Json m = manifest_json(manifest);
  m["kind"] = a.kind;
  m["n"] = a.n;
  m["seed"] = a.seed;
  m["derandomized"] = a.derandomized;
  m["distinct_deciles"] = semi.distinct_deciles;
  m["universe"] = semi.dataset.universe.labels();
  m["record_count"] = semi.dataset.records.size();
  m["estimators"] = bundle.status;
  write_json_file(join_path(a.out_dir, "manifest.json"), m);

  out << "deciles: " << semi.distinct_deciles << " distinct\n";
  print_estimates(out, bundle);
  return bundle.estimation_failed ? 3 : 0;
}

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& args,
                 std::ostream& out, std::ostream& err) {
  const RunManifest manifest = RunManifest::make("simulate", args, "");
  if (a.kind == "toy1" || a.kind == "toy2") {
    return simulate_toy(a, manifest, out, err);
  }
  if (a.kind == "intra" || a.kind == "inter") {
    return simulate_sweep(a, manifest, out);
  }
  return simulate_semisynth(a, manifest, out, err);
}

struct ProxyBuildArgs {
  std::string composition;
  std::string out_dir;
  bool strict = false;
};

int cmd_proxy_build(const ProxyBuildArgs& a,
                    const std::vector<std::string>& args, std::ostream& out) {
  const RunManifest manifest = RunManifest::make("proxy-build", args, "");
  const LoadCompositionResult composition =
      load_composition(a.composition, a.strict);

  CsvWriter w;
  std::vector<std::string> header = {composition.table.key_column.empty()
                                         ? std::string("key")
                                         : composition.table.key_column};
  for (const std::string& label : composition.table.universe.labels()) {
    header.push_back(label);
  }
  w.row(header);
  for (const auto& [key, dist] : composition.table.rows) {
    std::vector<std::string> line = {key};
    for (double p : dist.probs) {
      line.push_back(format_double(p));
    }
    w.row(line);
  }
  write_text_atomic(join_path(a.out_dir, "composition_normalized.csv"),
                    w.str());

  Json report;
  report["key_column"] = composition.table.key_column;
  report["universe"] = composition.table.universe.labels();
  report["report"] = report_json(composition.report);
  write_json_file(join_path(a.out_dir, "report.json"), report);
  write_json_file(join_path(a.out_dir, "manifest.json"),
                  manifest_json(manifest));

  out << "loaded " << composition.report.loaded << " geography rows ("
      << composition.report.renormalized << " renormalized, "
      << composition.report.rejected << " rejected)\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Group-disparity audit with probabilistic class membership",
               "dispaudit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  AuditArgs audit_args;
  CLI::App* audit =
      app.add_subcommand("audit", "Estimate group means and disparity");
  audit->add_option("--records", audit_args.records, "Decision CSV")
      ->required();
  audit
      ->add_option("--composition", audit_args.composition,
                   "Geography composition CSV")
      ->required();
  audit->add_option("--config", audit_args.config, "Column-map config file");
  audit->add_option("--q", audit_args.qs,
                    "Assignment threshold(s) in [0.5, 1); default 0.5");
  audit->add_option("--adv", audit_args.adv,
                    "Advantaged class (default: first composition class)");
  audit->add_option("--dis", audit_args.dis,
                    "Disadvantaged class (default: second composition class)");
  audit->add_flag("--strict", audit_args.strict,
                  "Abort on the first rejected row");
  audit->add_flag("--drop-unmatched", audit_args.drop_unmatched,
                  "Drop rows whose geography key has no composition row");
  audit->add_option("--out", audit_args.out_dir, "Output directory")
      ->required();

  DecomposeArgs decompose_args;
  CLI::App* decompose = app.add_subcommand(
      "decompose", "Decompose estimator bias into its drivers");
  decompose->add_option("--records", decompose_args.records, "Decision CSV");
  decompose->add_option("--composition", decompose_args.composition,
                        "Geography composition CSV");
  decompose->add_option("--config", decompose_args.config,
                        "Column-map config file");
  decompose
      ->add_option("--toy", decompose_args.toy,
                   "Built-in worked example instead of files")
      ->check(CLI::IsMember({"toy1", "toy2"}));
  decompose->add_option("--q", decompose_args.qs,
                        "Assignment threshold(s); default 0.5");
  decompose->add_option("--adv", decompose_args.adv, "Advantaged class");
  decompose->add_option("--dis", decompose_args.dis, "Disadvantaged class");
  decompose->add_flag("--strict", decompose_args.strict,
                      "Abort on the first rejected row");
  decompose->add_flag("--drop-unmatched", decompose_args.drop_unmatched,
                      "Drop rows whose geography key has no composition row");
  decompose->add_option("--out", decompose_args.out_dir, "Output directory")
      ->required();

  SimulateArgs simulate_args;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Generate populations and sweeps");
  simulate
      ->add_option("kind", simulate_args.kind,
                   "toy1, toy2, intra, inter, or semisynth")
      ->required()
      ->check(CLI::IsMember({"toy1", "toy2", "intra", "inter", "semisynth"}));
  simulate->add_option("--seed", simulate_args.seed, "Base RNG seed");
  simulate->add_option("--reps", simulate_args.reps,
                       "Replications per grid value (sweeps)");
  simulate->add_option("--q", simulate_args.qs,
                       "Assignment threshold(s); sweeps take exactly one");
  simulate->add_option("--d-grid", simulate_args.d_grid,
                       "Income-shift grid, lo:hi:count or comma list (intra)");
  simulate->add_option("--lambda-grid", simulate_args.lambda_grid,
                       "Steepness grid, lo:hi:count or comma list (inter)");
  simulate->add_option("--n", simulate_args.n,
                       "Record count (semisynth; default 100000)");
  simulate->add_flag("--derandomized", simulate_args.derandomized,
                     "Pin incomes to their means and outcomes to their "
                     "probabilities");
  simulate->add_option("--out", simulate_args.out_dir, "Output directory")
      ->required();

  ProxyBuildArgs proxy_args;
  CLI::App* proxy_build = app.add_subcommand(
      "proxy-build", "Validate and normalize a composition table");
  proxy_build
      ->add_option("--composition", proxy_args.composition,
                   "Geography composition CSV")
      ->required();
  proxy_build->add_flag("--strict", proxy_args.strict,
                        "Abort on the first rejected row");
  proxy_build->add_option("--out", proxy_args.out_dir, "Output directory")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(audit)) {
      return cmd_audit(audit_args, args, out, err);
    }
    if (app.got_subcommand(decompose)) {
      return cmd_decompose(decompose_args, args, out, err);
    }
    if (app.got_subcommand(simulate)) {
      return cmd_simulate(simulate_args, args, out, err);
    }
    return cmd_proxy_build(proxy_args, args, out);
  } catch (const ConfigError& error) {
    err << "error: " << error.what() << "\n";
    return 1;
  } catch (const DataError& error) {
    err << "error: " << error.what() << "\n";
    return 2;
  } catch (const EstimationError& error) {
    err << "error: " << error.what() << "\n";
    return 3;
  }
}

}  // namespace dispaudit
