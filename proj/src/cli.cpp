// Copyright 2026 The PatchShield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "patchshield/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "patchshield/adversary.hpp"
#include "patchshield/certifier.hpp"
#include "patchshield/classifier.hpp"
#include "patchshield/defense.hpp"
#include "patchshield/error.hpp"
#include "patchshield/geometry.hpp"
#include "patchshield/image.hpp"
#include "patchshield/serialization.hpp"

extern char** environ;

namespace patchshield::cli {

using nlohmann::json;

Config Config::FromJson(const json& doc) {
  Config c;
  try {
    if (doc.contains("backend")) c.backend = doc["backend"].get<std::string>();
    if (doc.contains("masks")) c.masks = doc["masks"].get<std::string>();
    if (doc.contains("patch_h")) c.patch_h = doc["patch_h"].get<int>();
    if (doc.contains("patch_w")) c.patch_w = doc["patch_w"].get<int>();
    if (doc.contains("patches")) c.patches = doc["patches"].get<int>();
    if (doc.contains("algo")) c.algo = doc["algo"].get<std::string>();
    if (doc.contains("parallelism")) c.parallelism = doc["parallelism"].get<std::size_t>();
    if (doc.contains("fill")) c.fill = doc["fill"].get<float>();
    if (doc.contains("cap")) c.cap = doc["cap"].get<std::size_t>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    Fail(ErrorKind::kInvalidArgument, std::string("malformed config: ") + e.what());
  }
  return c;
}

Config Config::FromEnvironment(const std::map<std::string, std::string>& env) {
  Config c;
  if (auto it = env.find("PATCHSHIELD_BACKEND_URL"); it != env.end() && !it->second.empty()) {
    c.backend = "remote:" + it->second;
  }
  if (auto it = env.find("PATCHSHIELD_PARALLELISM"); it != env.end() && !it->second.empty()) {
    std::size_t v = 0;
    const auto [ptr, ec] =
        std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    Require(ec == std::errc() && ptr == it->second.data() + it->second.size() && v >= 1,
            "PATCHSHIELD_PARALLELISM must be a positive integer");
    c.parallelism = v;
  }
  return c;
}

void Config::OverlayWith(const Config& over) {
  auto take = [](auto& mine, const auto& theirs) {
    if (theirs) mine = theirs;
  };
  take(backend, over.backend);
  take(masks, over.masks);
  take(patch_h, over.patch_h);
  take(patch_w, over.patch_w);
  take(patches, over.patches);
  take(algo, over.algo);
  take(parallelism, over.parallelism);
  take(fill, over.fill);
  take(cap, over.cap);
  take(seed, over.seed);
}

std::map<std::string, std::string> ProcessEnvironment() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string::npos) env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return env;
}

namespace {

// Binds a flag to an optional: the optional is filled only if the flag was
// given on the command line.
template <class T>
class OptionalFlag {
 public:
  OptionalFlag(CLI::App* app, const std::string& name, const std::string& help) {
    option_ = app->add_option(name, value_, help);
  }
  std::optional<T> get() const {
    return option_->count() > 0 ? std::optional<T>(value_) : std::nullopt;
  }

 private:
  T value_{};
  CLI::Option* option_ = nullptr;
};

struct SharedFlags {
  OptionalFlag<std::string> backend;
  OptionalFlag<std::string> masks;
  OptionalFlag<int> patch_h;
  OptionalFlag<int> patch_w;
  OptionalFlag<int> patches;
  OptionalFlag<std::string> algo;
  OptionalFlag<std::size_t> parallelism;
  OptionalFlag<float> fill;
  OptionalFlag<std::size_t> cap;
  OptionalFlag<std::uint64_t> seed;

  explicit SharedFlags(CLI::App* app)
      : backend(app, "--backend", "table:FILE or remote:URL"),
        masks(app, "--masks", "mask set JSON file"),
        patch_h(app, "--patch-h", "patch height in pixels"),
        patch_w(app, "--patch-w", "patch width in pixels"),
        patches(app, "--patches", "number of patches K"),
        algo(app, "--algo", "defense algorithm"),
        parallelism(app, "--parallelism", "concurrent classifier batches"),
        fill(app, "--fill", "mask fill value in [0, 1]"),
        cap(app, "--cap", "combination / strategy cap"),
        seed(app, "--seed", "random seed") {}

  Config ToConfig() const {
    Config c;
    c.backend = backend.get();
    c.masks = masks.get();
    c.patch_h = patch_h.get();
    c.patch_w = patch_w.get();
    c.patches = patches.get();
    c.algo = algo.get();
    c.parallelism = parallelism.get();
    c.fill = fill.get();
    c.cap = cap.get();
    c.seed = seed.get();
    return c;
  }
};

template <class T>
const T& Need(const std::optional<T>& value, const char* flag) {
  if (!value) Fail(ErrorKind::kInvalidArgument, std::string("missing required setting ") + flag);
  return *value;
}

std::size_t Parallelism(const Config& c) {
  if (c.parallelism) return *c.parallelism;
  return std::max(1u, std::thread::hardware_concurrency());
}

DefenseOptions MakeDefenseOptions(const Config& c) {
  DefenseOptions d;
  d.mask_fill = c.fill.value_or(0.0f);
  d.parallelism = Parallelism(c);
  d.batch_size = d.parallelism > 1 ? 64 : 0;
  return d;
}

CertifyOptions MakeCertifyOptions(const Config& c) {
  CertifyOptions o;
  o.mask_fill = c.fill.value_or(0.0f);
  o.parallelism = Parallelism(c);
  if (c.cap) o.combination_cap = *c.cap;
  return o;
}

// Patch shape from flags, falling back to the single grid the mask set was
// generated for.
PatchThreatModel ThreatFor(const Config& c, const MaskSet& masks) {
  PatchThreatModel t;
  t.patch_count = c.patches.value_or(1);
  if (c.patch_h || c.patch_w) {
    t.shapes.push_back({Need(c.patch_h, "--patch-h"), Need(c.patch_w, "--patch-w")});
  } else {
    Require(!masks.grids.empty(),
            "--patch-h/--patch-w are required for mask sets without generation params");
    for (const GridParams& g : masks.grids) t.shapes.push_back(g.patch);
  }
  t.Validate(masks.geometry);
  return t;
}

std::unique_ptr<Classifier> Backend(const Config& c) {
  return OpenBackend(Need(c.backend, "--backend"));
}

struct ManifestRow {
  std::string file;
  Label label = 0;
};

std::vector<ManifestRow> ReadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      Fail(ErrorKind::kIo, path.string() + ":" + std::to_string(line_no) +
                               ": expected 'filename,label'");
    }
    const std::string file = line.substr(0, comma);
    const std::string label = line.substr(comma + 1);
    Label value = 0;
    const auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), value);
    if (ec != std::errc() || ptr != label.data() + label.size() || value < 0) {
      if (rows.empty() && line_no == 1) continue;  // header row
      Fail(ErrorKind::kIo, path.string() + ":" + std::to_string(line_no) +
                               ": label must be a non-negative integer");
    }
    rows.push_back({file, value});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Subcommands

struct GenMasksArgs {
  int width = 0, height = 0, channels = 1;
  std::optional<int> patch_h, patch_w;
  int budget_h = 0, budget_w = 0;
  std::optional<long> shapes_budget;
  int max_shapes = 6;
  int patches = 1;
  std::string out;
};

int GenMasks(const GenMasksArgs& a, const Config& c, std::ostream& out, std::ostream& err) {
  const ImageGeometry geom{a.height, a.width, a.channels};
  geom.Validate();
  MaskSet base;
  PatchThreatModel threat;
  if (a.shapes_budget) {
    const std::vector<PatchShape> shapes =
        GenerateShapeCoverSet(*a.shapes_budget, geom, a.max_shapes);
    base = GenerateShapeCoverMaskSet(geom, shapes, a.budget_h, a.budget_w);
    threat.shapes = shapes;
    threat.area_budget = a.shapes_budget;
  } else {
    const int ph = a.patch_h ? *a.patch_h : Need(c.patch_h, "--patch-h");
    const int pw = a.patch_w ? *a.patch_w : Need(c.patch_w, "--patch-w");
    base = GenerateMaskSet2d(geom, {ph, pw}, a.budget_h, a.budget_w);
    threat.shapes = {{ph, pw}};
  }
  if (auto gap = FindUncoveredPatch(base, threat)) {
    err << "error: generated mask set leaves the patch at (" << gap->top << ", " << gap->left
        << ") uncovered\n";
    return kExitDomain;
  }
  const int k = a.patches;
  const MaskSet result =
      k >= 2 ? GenerateMultiPatchMaskSet(base, k, c.cap.value_or(kDefaultCombinationCap)) : base;
  if (a.out.empty()) {
    out << ToJson(result).dump() << "\n";
    return kExitOk;
  }
  SaveMaskSet(result, a.out);
  json summary = ToJson(result);
  summary.erase("masks");
  summary["mask_count"] = result.size();
  summary["out"] = a.out;
  summary["covering"] = true;
  if (threat.area_budget) summary["shapes"] = ToJson(threat)["shapes"];
  out << summary.dump() << "\n";
  return kExitOk;
}

int Predict(const std::string& image_path, const Config& c, std::ostream& out) {
  const Image image = LoadImage(image_path);
  const MaskSet masks = LoadMaskSet(Need(c.masks, "--masks"));
  const std::unique_ptr<Classifier> backend = Backend(c);
  DefenseOptions options = MakeDefenseOptions(c);
  const std::string algo = c.algo.value_or("double");
  DefenseOutcome outcome;
  if (algo == "double") {
    outcome = DoubleMasking(image, *backend, masks, options);
  } else if (algo == "challenger") {
    options.shuffle_seed = c.seed;
    outcome = ChallengerMasking(image, *backend, masks, options);
  } else {
    Fail(ErrorKind::kInvalidArgument, "--algo must be double or challenger");
  }
  json doc = ToJson(outcome);
  doc["algo"] = algo;
  out << doc.dump() << "\n";
  return kExitOk;
}

int CertifyCommand(const std::string& image_path, Label label, bool full_matrix,
                   const Config& c, std::ostream& out) {
  const Image image = LoadImage(image_path);
  const MaskSet masks = LoadMaskSet(Need(c.masks, "--masks"));
  const PatchThreatModel threat = ThreatFor(c, masks);
  const std::unique_ptr<Classifier> backend = Backend(c);
  CertifyOptions options = MakeCertifyOptions(c);
  options.full_matrix = full_matrix;
  const Certificate cert = threat.patch_count >= 2
                               ? CertifyMultiPatch(image, label, *backend, masks, threat, options)
                               : Certify(image, label, *backend, masks, threat, options);
  out << ToJson(cert).dump() << "\n";
  return cert.reason == CertReason::kNotCovering ? kExitDomain : kExitOk;
}

int Evaluate(const std::string& manifest, const std::string& images_dir,
             const std::string& report_path, const Config& c, std::ostream& out) {
  const std::vector<ManifestRow> rows = ReadManifest(manifest);
  Require(!rows.empty(), "manifest lists no images");
  const MaskSet masks = LoadMaskSet(Need(c.masks, "--masks"));
  const PatchThreatModel threat = ThreatFor(c, masks);
  const std::unique_ptr<Classifier> backend = Backend(c);
  EvaluateOptions options;
  options.defense = MakeDefenseOptions(c);
  options.certify = MakeCertifyOptions(c);
  const std::string algo = c.algo.value_or("double");
  Require(algo == "double" || algo == "challenger", "--algo must be double or challenger");
  options.algorithm = algo == "double" ? DefenseAlgorithm::kDoubleMasking
                                       : DefenseAlgorithm::kChallengerMasking;
  DatasetEvaluator evaluator(*backend, masks, threat, options);
  for (const ManifestRow& row : rows) {
    const std::filesystem::path path = std::filesystem::path(images_dir) / row.file;
    const ItemRecord* rec = nullptr;
    try {
      const Image image = LoadImage(path);
      rec = &evaluator.Evaluate(row.file, image, row.label);
    } catch (const Error& e) {
      if (!e.is_environmental() && e.kind() != ErrorKind::kMalformedImage &&
          e.kind() != ErrorKind::kGeometryMismatch) {
        throw;
      }
      rec = &evaluator.RecordFailure(row.file, row.label, e.what());
    }
    json line = ToJson(*rec);
    line["type"] = "item";
    out << line.dump() << "\n" << std::flush;
  }
  const DatasetMetrics metrics = evaluator.Finish();
  json summary = SummaryJson(metrics);
  summary["type"] = "summary";
  out << summary.dump() << "\n";
  if (!report_path.empty()) WriteJsonFile(ToJson(metrics), report_path);
  return kExitOk;
}

int Simulate(const std::string& instance_path, bool exhaustive, std::optional<std::uint64_t> trials,
             std::size_t max_recorded, const Config& c, std::ostream& out) {
  const GameInstance game = LoadGameInstance(instance_path);
  const std::string algo = c.algo.value_or("both");
  std::vector<Algorithm> algorithms;
  if (algo == "both") {
    algorithms = {Algorithm::kDoubleMasking, Algorithm::kChallengerMasking};
  } else {
    algorithms = {AlgorithmFromString(algo)};
  }
  Require(!(exhaustive && trials), "--exhaustive and --trials are mutually exclusive");
  AttackOptions options;
  options.max_recorded = max_recorded;
  if (c.cap) options.max_strategies_per_placement = *c.cap;
  AttackReport report;
  if (trials) {
    const std::uint64_t seed = Need(c.seed, "--seed (randomized search needs a seed)");
    report = RandomizedAttack(game, algorithms, *trials, seed, options);
  } else {
    report = ExhaustiveAttack(game, algorithms, options);
  }
  const Certificate cert = CertifyInstance(game);
  json doc = ToJson(report);
  doc["certificate"] = ToJson(cert);
  out << doc.dump() << "\n";
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>& env) {
  CLI::App app{"Certified patch-robust classification: mask sets, robust prediction, "
               "certification and adversary simulation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");

  auto* gen = app.add_subcommand("gen-masks", "generate an R-covering mask set");
  GenMasksArgs gen_args;
  gen->add_option("--width", gen_args.width, "image width")->required();
  gen->add_option("--height", gen_args.height, "image height")->required();
  gen->add_option("--channels", gen_args.channels, "image channels");
  OptionalFlag<int> gen_patch_h(gen, "--patch-h", "estimated patch height");
  OptionalFlag<int> gen_patch_w(gen, "--patch-w", "estimated patch width");
  gen->add_option("--budget-h", gen_args.budget_h, "masks along the height")->required();
  gen->add_option("--budget-w", gen_args.budget_w, "masks along the width")->required();
  OptionalFlag<long> gen_shapes(gen, "--shapes-budget", "cover every rectangle of area <= AREA");
  gen->add_option("--max-shapes", gen_args.max_shapes, "shape count for --shapes-budget");
  gen->add_option("--patches", gen_args.patches, "number of patches K");
  gen->add_option("--out", gen_args.out, "output file (default: stdout)");
  OptionalFlag<std::size_t> gen_cap(gen, "--cap", "combination cap");

  auto* predict = app.add_subcommand("predict", "robust prediction for one image");
  std::string predict_image;
  predict->add_option("--image", predict_image, "PNG or raw float image")->required();
  SharedFlags predict_flags(predict);

  auto* certify = app.add_subcommand("certify", "certify one labelled image");
  std::string certify_image;
  Label certify_label = 0;
  bool full_matrix = false;
  certify->add_option("--image", certify_image, "PNG or raw float image")->required();
  certify->add_option("--label", certify_label, "true label")->required();
  certify->add_flag("--full-matrix", full_matrix, "evaluate every pair");
  SharedFlags certify_flags(certify);

  auto* evaluate = app.add_subcommand("evaluate", "clean and certified accuracy of a dataset");
  std::string manifest, images_dir, report_path;
  evaluate->add_option("--manifest", manifest, "CSV of filename,label")->required();
  evaluate->add_option("--images", images_dir, "image directory")->required();
  evaluate->add_option("--out", report_path, "write the full JSON report here");
  SharedFlags evaluate_flags(evaluate);

  auto* simulate = app.add_subcommand("simulate", "adaptive-attacker search on a toy instance");
  std::string instance_path;
  bool exhaustive = false;
  std::size_t max_recorded = 32;
  simulate->add_option("--instance", instance_path, "game instance JSON")->required();
  simulate->add_flag("--exhaustive", exhaustive, "enumerate every strategy (default)");
  OptionalFlag<std::uint64_t> sim_trials(simulate, "--trials", "randomized strategies");
  simulate->add_option("--max-recorded", max_recorded, "successes to list");
  SharedFlags simulate_flags(simulate);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }

  try {
    Config config;
    if (!config_path.empty()) config = Config::FromJson(ReadJsonFile(config_path));
    config.OverlayWith(Config::FromEnvironment(env));

    if (gen->parsed()) {
      gen_args.patch_h = gen_patch_h.get();
      gen_args.patch_w = gen_patch_w.get();
      gen_args.shapes_budget = gen_shapes.get();
      Config flags;
      flags.cap = gen_cap.get();
      config.OverlayWith(flags);
      return GenMasks(gen_args, config, out, err);
    }
    if (predict->parsed()) {
      config.OverlayWith(predict_flags.ToConfig());
      return Predict(predict_image, config, out);
    }
    if (certify->parsed()) {
      config.OverlayWith(certify_flags.ToConfig());
      return CertifyCommand(certify_image, certify_label, full_matrix, config, out);
    }
    if (evaluate->parsed()) {
      config.OverlayWith(evaluate_flags.ToConfig());
      return Evaluate(manifest, images_dir, report_path, config, out);
    }
    if (simulate->parsed()) {
      config.OverlayWith(simulate_flags.ToConfig());
      return Simulate(instance_path, exhaustive, sim_trials.get(), max_recorded, config, out);
    }
  } catch (const Error& e) {
    err << "error (" << ToString(e.kind()) << "): " << e.what() << "\n";
    const bool io = e.is_environmental() || e.kind() == ErrorKind::kMalformedImage;
    return io ? kExitIo : kExitDomain;
  }
  return kExitDomain;
}

}  // namespace patchshield::cli
