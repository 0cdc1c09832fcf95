#include "placemap/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "placemap/binary_io.hpp"
#include "placemap/descriptor_store.hpp"
#include "placemap/error.hpp"
#include "placemap/evaluator.hpp"
#include "placemap/map_index.hpp"
#include "placemap/matcher.hpp"
#include "placemap/orientation.hpp"
#include "placemap/parallel.hpp"
#include "placemap/simd/kernels.hpp"
#include "placemap/synthgen.hpp"

namespace placemap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Argument helpers

Dataset load_dataset_arg(const std::string& path) {
  const fs::path p(path);
  if (fs::is_regular_file(p) && p.extension() == ".json") {
    return load_dataset(p, p.parent_path() / "descriptors.vprd");
  }
  return load_dataset_dir(p);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size() && v >= 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  raise(ErrorKind::Config, what + " '" + s + "' is not a non-negative integer");
}

double parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  raise(ErrorKind::Config, what + " '" + s + "' is not a number");
}

std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> ks;
  for (const auto& item : split(s, ',')) ks.push_back(parse_count(item, "K"));
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

// "a..b" or a comma list.
std::vector<std::string> parse_axis(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) return split(s, ',');
  const std::size_t lo = parse_count(s.substr(0, dots), "range start");
  const std::size_t hi = parse_count(s.substr(dots + 2), "range end");
  if (lo > hi) raise(ErrorKind::Config, "empty range '" + s + "'");
  std::vector<std::string> out;
  for (std::size_t v = lo; v <= hi; ++v) out.push_back(std::to_string(v));
  return out;
}

GroundTruthSpec parse_ground_truth(const std::string& spec, const Dataset& refs, const Dataset& queries) {
  if (spec == "one_to_one") return ground_truth_one_to_one(queries);
  const auto colon = spec.find(':');
  const std::string mode = spec.substr(0, colon);
  if (colon == std::string::npos) raise(ErrorKind::Config, "ground truth '" + spec + "' needs a tolerance");
  const std::string arg = spec.substr(colon + 1);
  if (mode == "window") return ground_truth_index_window(refs, queries, parse_count(arg, "window"));
  if (mode == "radius") return ground_truth_radius(refs, queries, parse_real(arg, "radius"));
  raise(ErrorKind::Config, "unknown ground truth mode '" + mode + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_file(path.string(), {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string format_degrees(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

// Options shared by commands that build maps.
struct MapOptions {
  std::string method = "qr";
  std::string rank;
  std::string filter;
  double dep_tol = kDefaultDepTol;
  bool no_r_factor = false;
  bool no_sources = false;

  void add_to(CLI::App* app) {
    app->add_option("--method", method, "qr | qr_2vp | svd")->capture_default_str();
    app->add_option("--rank", rank, "svd rank: positive integer or m-1");
    app->add_option("--filter", filter, "reference filter, e.g. condition=c0+c1;heading=0+90");
    app->add_option("--dep-tol", dep_tol, "relative dependency tolerance")->capture_default_str();
    app->add_flag("--no-r-factor", no_r_factor, "omit R factors (disables orientation)");
    app->add_flag("--no-sources", no_sources, "omit source columns (disables incremental updates)");
  }

  MapBuildConfig config(unsigned threads) const {
    MapBuildConfig c;
    c.method = parse_map_method(method);
    if (!rank.empty()) c.svd_rank = SvdRank::parse(rank);
    if (!filter.empty()) c.reference_filter = parse_filter(filter);
    c.dep_tol = dep_tol;
    c.store_r_factor = !no_r_factor;
    c.retain_sources = !no_sources;
    c.threads = threads;
    c.validate();
    return c;
  }
};

struct BaselineOptions {
  std::size_t lse_top_c = 25;
  double lse_beta = 1.0;
  bool no_sum_renormalize = false;

  void add_to(CLI::App* app) {
    app->add_option("--lse-top-c", lse_top_c, "LogSumExp candidate pool")->capture_default_str();
    app->add_option("--lse-beta", lse_beta, "LogSumExp temperature")->capture_default_str();
    app->add_flag("--no-sum-renormalize", no_sum_renormalize, "score raw summed bundles");
  }

  BaselineConfig config() const {
    BaselineConfig c{lse_top_c, lse_beta, !no_sum_renormalize};
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Commands

struct BuildArgs {
  std::string refs;
  std::string out;
  std::string stats;
  MapOptions map;
};

int cmd_build_map(const BuildArgs& a, unsigned threads, bool deterministic, std::ostream& out) {
  const MapBuildConfig cfg = a.map.config(threads);
  const Dataset refs = load_dataset_arg(a.refs);
  BuildStats stats;
  const MapIndex map = build_map(refs, cfg, &stats);
  const auto bytes = serialize_map(map);
  write_text(a.out, std::string(bytes.begin(), bytes.end()));

  json j;
  j["map"] = a.out;
  j["references"] = a.refs;
  j["config"] = json::parse(cfg.to_json());
  j["decompositions"] = stats.decompositions;
  j["places"] = stats.places;
  j["skipped_places"] = stats.skipped_places;
  j["warnings"] = stats.warnings;
  j["file_bytes"] = bytes.size();
  j["memory_bytes"] = map.memory_bytes();
  j["wall_s"] = deterministic ? json(nullptr) : json(stats.wall_seconds);
  j["threads"] = deterministic ? json(nullptr) : json(resolve_threads(threads));
  j["simd"] = std::string(simd::isa_name(simd::kernels().isa));
  j["version"] = PLACEMAP_VERSION;
  const std::string stats_path = a.stats.empty() ? a.out + ".stats.json" : a.stats;
  write_text(stats_path, j.dump(2) + "\n");

  out << "built " << map.subspace_count() << " subspaces for " << map.place_count() << " places";
  if (stats.skipped_places) out << " (" << stats.skipped_places << " skipped)";
  out << " -> " << a.out << "\n";
  return 0;
}

struct MatchArgs {
  std::string map_path;
  std::string refs;
  std::string queries;
  std::string strategy = "qr";
  std::size_t top = 5;
  std::string out;
  MapOptions map;
  BaselineOptions baseline;
};

int cmd_match(const MatchArgs& a, unsigned threads, std::ostream& out) {
  const Strategy strategy = parse_strategy(a.strategy);
  const BaselineConfig bcfg = a.baseline.config();
  const QuerySet qs = queries_from_dataset(load_dataset_arg(a.queries));
  BatchOutput result;
  if (strategy == Strategy::Subspace) {
    if (!a.map_path.empty()) {
      result = batch_match(load_map(a.map_path), qs, threads);
    } else if (!a.refs.empty()) {
      result = batch_match(build_map(load_dataset_arg(a.refs), a.map.config(threads)), qs, threads);
    } else {
      raise(ErrorKind::Config, "qr matching needs --map or --refs");
    }
  } else {
    if (a.refs.empty()) raise(ErrorKind::Config, "strategy " + a.strategy + " needs --refs");
    const MapBuildConfig mcfg = a.map.config(threads);
    const ReferenceSet refs = ReferenceSet::from_dataset(load_dataset_arg(a.refs), mcfg.reference_filter);
    result = batch_match(refs, qs, strategy, bcfg, threads);
  }
  std::ostringstream lines;
  for (const MatchResult& r : result.results) lines << to_json_line(r, a.top) << "\n";
  if (a.out.empty()) {
    out << lines.str();
  } else {
    write_text(a.out, lines.str());
  }
  return 0;
}

struct EvaluateArgs {
  std::string refs;
  std::string queries;
  std::string strategies = "qr,pooling";
  std::string ks = "1,5,10,25";
  std::string gt = "one_to_one";
  std::vector<std::string> sweeps;
  std::string reduce = "slice";
  std::string subsets;
  std::string out_dir = ".";
  MapOptions map;
  BaselineOptions baseline;
};

int cmd_evaluate(const EvaluateArgs& a, unsigned threads, bool deterministic, std::ostream& out) {
  EvalConfig cfg;
  cfg.strategies = parse_strategies(a.strategies);
  cfg.ks = parse_ks(a.ks);
  cfg.map = a.map.config(threads);
  cfg.baseline = a.baseline.config();
  cfg.threads = threads;
  cfg.validate();
  const ReduceMethod reduce = a.reduce == "pca" ? ReduceMethod::Pca
                              : a.reduce == "slice"
                                  ? ReduceMethod::Slice
                                  : (raise(ErrorKind::Config, "unknown reduction '" + a.reduce + "'"), ReduceMethod::Slice);

  std::vector<SvdRank> ranks;
  std::vector<std::size_t> dims;
  for (const auto& sweep : a.sweeps) {
    const auto eq = sweep.find('=');
    if (eq == std::string::npos) raise(ErrorKind::Config, "sweep '" + sweep + "' lacks '='");
    const std::string axis = sweep.substr(0, eq);
    for (const auto& v : parse_axis(sweep.substr(eq + 1))) {
      if (axis == "rank") {
        ranks.push_back(SvdRank::parse(v));
      } else if (axis == "dim") {
        dims.push_back(parse_count(v, "dimension"));
      } else {
        raise(ErrorKind::Config, "unknown sweep axis '" + axis + "'");
      }
    }
  }
  std::vector<ReferenceFilter> subsets;
  const Dataset refs = load_dataset_arg(a.refs);
  if (a.subsets == "pairs") {
    subsets = pairwise_condition_subsets(refs);
  } else {
    for (const auto& s : split(a.subsets, '|')) subsets.push_back(parse_filter(s));
  }

  const Dataset queries = load_dataset_arg(a.queries);
  const GroundTruthSpec gt = parse_ground_truth(a.gt, refs, queries);

  EvalReport report;
  report.ground_truth = gt.describe();
  json echo = json::parse(cfg.to_json());
  echo["references"] = a.refs;
  echo["queries"] = a.queries;
  echo["sweeps"] = a.sweeps;
  echo["reduce"] = a.reduce;
  echo["subsets"] = a.subsets;
  report.config_json = echo.dump();

  report.rows = evaluate(refs, queries, gt, cfg, cfg.map.reference_filter.describe());
  if (!ranks.empty()) {
    auto rows = sweep_rank(refs, queries, gt, ranks, cfg);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  if (!dims.empty()) {
    auto rows = sweep_dimension(refs, queries, gt, dims, reduce, cfg);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  if (!subsets.empty()) {
    auto rows = sweep_reference_subsets(refs, queries, gt, subsets, cfg);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }

  const fs::path dir(a.out_dir);
  write_text(dir / "report.csv", report_csv(report, deterministic));
  write_text(dir / "report.json", report_json(report, deterministic));
  out << report.rows.size() << " rows -> " << (dir / "report.csv").string() << "\n";
  for (const RecallRow& row : report.rows) {
    out << "  " << row.strategy << " " << row.method << " " << row.rank << " dim=" << row.dim
        << " subset=" << row.subset << " ";
    if (row.error) {
      out << "error:" << *row.error << "\n";
    } else {
      out << "R@" << row.ks.front() << "=" << row.recall.front() << "\n";
    }
  }
  return 0;
}

struct OrientArgs {
  std::vector<double> bias;
  std::string refs;
  std::string queries;
  std::string method = "qr";
  std::string place = "truth";
  double tau = 0.1;
  double translation = 5.0;
  double depth = 10.0;
  std::string out;
};

int cmd_orient(const OrientArgs& a, unsigned threads, std::ostream& out, std::ostream& err) {
  if (!a.bias.empty()) {
    if (a.bias.size() != 2) raise(ErrorKind::Config, "--bias-bound takes T and D");
    out << format_degrees(bias_bound(a.bias[0], a.bias[1])) << "\n";
    return 0;
  }
  if (a.refs.empty() || a.queries.empty()) raise(ErrorKind::Config, "orient needs --refs and --queries");
  const bool use_qr = a.method == "qr" || a.method == "both";
  const bool use_pool = a.method == "pooling" || a.method == "both";
  if (!use_qr && !use_pool) raise(ErrorKind::Config, "unknown orientation method '" + a.method + "'");
  if (a.place != "truth" && a.place != "match") raise(ErrorKind::Config, "--place must be truth or match");
  const double threshold = bias_bound(a.translation, a.depth);

  const Dataset refs = load_dataset_arg(a.refs);
  const Dataset queries = load_dataset_arg(a.queries);
  for (const auto& r : refs.manifest.records) {
    if (!r.heading_deg) raise(ErrorKind::Capability, "reference '" + r.image_id + "' has no heading");
  }
  MapBuildConfig mcfg;
  mcfg.retain_sources = false;
  mcfg.threads = threads;
  const MapIndex map = build_map(refs, mcfg);
  const ReferenceSet rs = ReferenceSet::from_dataset(refs);
  const QuerySet qs = queries_from_dataset(queries);
  std::vector<MatchResult> matches;
  if (a.place == "match") matches = batch_match(map, qs, threads).results;

  std::ostringstream csv;
  csv << "query_id,method,theta_deg,resultant_length,gt_theta,abs_error_deg\n";
  std::map<std::string, std::pair<std::size_t, std::size_t>> within;  // method -> (ok, total)
  std::map<std::string, double> abs_sum;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const ImageRecord& rec = queries.record(qi);
    const auto span = queries.descriptor(qi);
    const std::vector<double> d(span.begin(), span.end());
    const std::string place = a.place == "match" ? matches[qi].place_at(0) : rec.place_id;
    const auto mp = map.find_place(place);
    const auto rp = rs.find_place(place);
    if (!mp || !rp) raise(ErrorKind::Evaluation, "query '" + rec.image_id + "' names unknown place '" + place + "'");

    auto emit = [&](HeadingMethod m, auto&& estimate) {
      const std::string name(to_string(m));
      csv << rec.image_id << ',' << name << ',';
      try {
        const HeadingEstimate est = estimate();
        csv << format_degrees(est.theta_deg) << ',' << format_degrees(est.resultant_length) << ',';
        if (rec.heading_deg) {
          const double e = angular_error(est.theta_deg, *rec.heading_deg);
          csv << format_degrees(*rec.heading_deg) << ',' << format_degrees(e);
          auto& [ok, total] = within[name];
          ++total;
          if (e <= threshold) ++ok;
          abs_sum[name] += e;
        } else {
          csv << ',';
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::UndefinedHeading) throw;
        csv << "undefined,0,";
        if (rec.heading_deg) csv << format_degrees(*rec.heading_deg);
        csv << ',';
        if (rec.heading_deg) ++within[name].second;
      }
      csv << '\n';
    };
    if (use_qr) {
      emit(HeadingMethod::QrCoeff, [&] {
        // A 2VP-free map has exactly one subspace per place.
        return estimate_heading_qr(widen(map.subspace(map.place_begin(*mp)), map.dimension()), d);
      });
    }
    if (use_pool) {
      emit(HeadingMethod::PoolingSoftmax, [&] { return estimate_heading_pooling(rs.place_matrix(*rp), d, a.tau); });
    }
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  for (const auto& [name, counts] : within) {
    if (counts.second == 0) continue;
    err << name << ": " << counts.first << "/" << counts.second << " within "
        << format_degrees(threshold) << " deg, mean abs error "
        << format_degrees(abs_sum[name] / static_cast<double>(counts.second)) << " deg\n";
  }
  return 0;
}

struct SynthArgs {
  std::string out;
  SynthConfig cfg;
  std::string headings = "0,90,180,270";
  std::string query_mode = "intermediate";
};

int cmd_synth(SynthArgs a, std::ostream& out) {
  a.cfg.headings.clear();
  for (const auto& h : split(a.headings, ',')) a.cfg.headings.push_back(parse_real(h, "heading"));
  if (a.query_mode == "aligned") {
    a.cfg.query_mode = QueryMode::Aligned;
  } else if (a.query_mode == "intermediate") {
    a.cfg.query_mode = QueryMode::Intermediate;
  } else {
    raise(ErrorKind::Config, "unknown query mode '" + a.query_mode + "'");
  }
  a.cfg.validate();
  const SynthWorld world = generate(a.cfg);
  save_world(world, a.cfg, a.out);
  out << "wrote " << world.references.size() << " references and " << world.queries.size()
      << " queries -> " << a.out << "\n";
  return 0;
}

void inspect_map(const MapIndex& map, std::size_t file_bytes, std::ostream& out) {
  std::map<std::uint32_t, std::size_t> ranks;
  bool has_r = true;
  bool has_sources = true;
  for (const auto& e : map.entries()) {
    ++ranks[e->rank];
    has_r = has_r && e->r_factor.has_value();
    has_sources = has_sources && e->sources.has_value();
  }
  out << "map\n  n: " << map.dimension() << "\n  places: " << map.place_count()
      << "\n  subspaces: " << map.subspace_count() << "\n  method: " << to_string(map.config().method)
      << "\n  config: " << map.config().to_json() << "\n  rank histogram:";
  for (const auto& [r, c] : ranks) out << " " << r << "x" << c;
  out << "\n  basis columns: " << map.total_basis_columns() << "\n  memory bytes: " << map.memory_bytes()
      << "\n  file bytes: " << file_bytes << "\n  r factors: " << (has_r ? "yes" : "no")
      << "\n  source columns: " << (has_sources ? "yes" : "no") << "\n";
}

void inspect_dataset(const Dataset& d, bool per_place, std::ostream& out) {
  std::map<std::string, std::size_t> per;
  std::map<double, std::size_t> headings;
  std::map<std::string, std::size_t> conditions;
  std::size_t without_heading = 0;
  for (const auto& r : d.manifest.records) {
    ++per[r.place_id];
    if (r.heading_deg) {
      ++headings[*r.heading_deg];
    } else {
      ++without_heading;
    }
    if (r.condition) ++conditions[*r.condition];
  }
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& [p, c] : per) ++histogram[c];
  out << "dataset\n  n: " << d.dim() << "\n  images: " << d.size() << "\n  places: " << per.size()
      << "\n  images per place:";
  for (const auto& [c, k] : histogram) out << " " << c << "x" << k;
  out << "\n  headings:";
  for (const auto& [h, c] : headings) out << " " << h << "(" << c << ")";
  if (without_heading) out << " none(" << without_heading << ")";
  out << "\n  conditions:";
  for (const auto& [c, k] : conditions) out << " " << c << "(" << k << ")";
  out << "\n  sequence order: " << (d.manifest.sequence_order ? "yes" : "no") << "\n";
  if (per_place) {
    for (const auto& [p, c] : per) out << "  " << p << " " << c << "\n";
  }
}

int cmd_inspect(const std::string& path, bool per_place, std::ostream& out) {
  const fs::path p(path);
  if (fs::is_directory(p) || p.extension() == ".json") {
    inspect_dataset(load_dataset_arg(path), per_place, out);
    return 0;
  }
  const auto bytes = io::read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "VPRM", 4) == 0) {
    inspect_map(deserialize_map(bytes), bytes.size(), out);
    return 0;
  }
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "VPRD", 4) == 0) {
    const DescriptorMatrix m = read_vprd(p);
    out << "descriptor block\n  n: " << m.dim() << "\n  count: " << m.count() << "\n";
    return 0;
  }
  raise(ErrorKind::Format, "'" + path + "' is neither a map, a descriptor block nor a dataset");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"placemap: multi-reference place recognition by subspace projection", "placemap"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(PLACEMAP_VERSION));
  unsigned threads = 0;
  bool deterministic = false;
  app.add_option("--threads", threads, "worker threads (default: PLACEMAP_THREADS, then all cores)");
  app.add_flag("--deterministic", deterministic, "omit timing fields from outputs");

  BuildArgs build;
  auto* c_build = app.add_subcommand("build-map", "factor a reference dataset into a .vprmap");
  c_build->add_option("--refs", build.refs, "reference dataset directory")->required();
  c_build->add_option("--out", build.out, "output .vprmap path")->required();
  c_build->add_option("--stats", build.stats, "build stats JSON (default <out>.stats.json)");
  build.map.add_to(c_build);

  MatchArgs match;
  auto* c_match = app.add_subcommand("match", "rank places for each query (JSON lines)");
  c_match->add_option("--map", match.map_path, "prebuilt .vprmap (qr strategy)");
  c_match->add_option("--refs", match.refs, "reference dataset directory");
  c_match->add_option("--queries", match.queries, "query dataset directory")->required();
  c_match->add_option("--strategy", match.strategy, "qr | pooling | dmat | sum | lse")->capture_default_str();
  c_match->add_option("--top", match.top, "places per result line")->capture_default_str();
  c_match->add_option("--out", match.out, "output path (default stdout)");
  match.map.add_to(c_match);
  match.baseline.add_to(c_match);

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Recall@K report with optional sweeps");
  c_eval->add_option("--refs", eval.refs, "reference dataset directory")->required();
  c_eval->add_option("--queries", eval.queries, "query dataset directory")->required();
  c_eval->add_option("--strategies", eval.strategies, "comma list of strategies")->capture_default_str();
  c_eval->add_option("--ks", eval.ks, "comma list of K")->capture_default_str();
  c_eval->add_option("--gt", eval.gt, "one_to_one | window:W | radius:METERS")->capture_default_str();
  c_eval->add_option("--sweep", eval.sweeps, "rank=1..4 | rank=1,m-1 | dim=256,128 (repeatable)");
  c_eval->add_option("--reduce", eval.reduce, "slice | pca for dim sweeps")->capture_default_str();
  c_eval->add_option("--subsets", eval.subsets, "pairs, or filters separated by '|'");
  c_eval->add_option("--out", eval.out_dir, "output directory")->capture_default_str();
  eval.map.add_to(c_eval);
  eval.baseline.add_to(c_eval);

  OrientArgs orient;
  auto* c_orient = app.add_subcommand("orient", "estimate query headings");
  c_orient->add_option("--bias-bound", orient.bias, "print the heading bias bound for T D and exit")
      ->expected(2);
  c_orient->add_option("--refs", orient.refs, "reference dataset directory");
  c_orient->add_option("--queries", orient.queries, "query dataset directory");
  c_orient->add_option("--method", orient.method, "qr | pooling | both")->capture_default_str();
  c_orient->add_option("--place", orient.place, "truth | match")->capture_default_str();
  c_orient->add_option("--tau", orient.tau, "pooling softmax temperature")->capture_default_str();
  c_orient->add_option("--translation", orient.translation, "T in meters")->capture_default_str();
  c_orient->add_option("--depth", orient.depth, "D in meters")->capture_default_str();
  c_orient->add_option("--out", orient.out, "output CSV (default stdout)");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "write a seeded synthetic world");
  c_synth->add_option("--out", synth.out, "output directory")->required();
  c_synth->add_option("--seed", synth.cfg.seed)->capture_default_str();
  c_synth->add_option("--n", synth.cfg.n, "descriptor dimension")->capture_default_str();
  c_synth->add_option("--places", synth.cfg.num_places)->capture_default_str();
  c_synth->add_option("--headings", synth.headings, "comma list of degrees")->capture_default_str();
  c_synth->add_option("--conditions", synth.cfg.conditions)->capture_default_str();
  c_synth->add_option("--shared-frac", synth.cfg.shared_frac)->capture_default_str();
  c_synth->add_option("--noise", synth.cfg.noise_sigma, "per-coordinate noise sigma")->capture_default_str();
  c_synth->add_option("--query-mode", synth.query_mode, "aligned | intermediate")->capture_default_str();
  c_synth->add_option("--queries-per-place", synth.cfg.queries_per_place)->capture_default_str();

  std::string inspect_path;
  bool per_place = false;
  auto* c_inspect = app.add_subcommand("inspect", "summarize a map, block or dataset");
  c_inspect->add_option("path", inspect_path, "file or dataset directory")->required();
  c_inspect->add_flag("--per-place", per_place, "list image counts for every place");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_build) return cmd_build_map(build, threads, deterministic, out);
    if (*c_match) return cmd_match(match, threads, out);
    if (*c_eval) return cmd_evaluate(eval, threads, deterministic, out);
    if (*c_orient) return cmd_orient(orient, threads, out, err);
    if (*c_synth) return cmd_synth(synth, out);
    if (*c_inspect) return cmd_inspect(inspect_path, per_place, out);
  } catch (const Error& e) {
    err << "placemap: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "placemap: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"placemap"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace placemap::cli
