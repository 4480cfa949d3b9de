/* Copyright 2026 The drivemt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "drivemt/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "drivemt/dataset.hpp"
#include "drivemt/error.hpp"
#include "drivemt/image_io.hpp"
#include "drivemt/render.hpp"
#include "text_util.hpp"

namespace drivemt {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Spec parsing.

std::vector<ErrorBound> parse_bounds(const std::vector<double>& values) {
  std::vector<ErrorBound> bounds;
  for (double v : values) bounds.emplace_back(v);
  if (bounds.empty()) throw ConfigError("at least one error bound is required");
  for (std::size_t i = 1; i < bounds.size(); ++i) {
    if (!(bounds[i - 1].epsilon() < bounds[i].epsilon())) {
      throw ConfigError("error bounds must be strictly ascending");
    }
  }
  return bounds;
}

namespace {

double spec_number(const std::string& text, const std::string& spec) {
  const auto v = detail::parse_double(detail::trim(text));
  if (!v || !std::isfinite(*v)) throw ConfigError("'" + text + "' is not a number in '" + spec + "'");
  return *v;
}

std::pair<std::string, std::string> split_kind(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

std::unique_ptr<SteeringModel> build_model(const std::string& spec, const ModelSpecOptions& o) {
  const auto [kind, rest] = split_kind(spec);
  if (kind == "constant") return constant_model(spec_number(rest, spec));
  if (kind == "brightness") return brightness_model(spec_number(rest, spec));
  if (kind == "cnn") {
    if (rest.empty()) throw ConfigError("cnn model needs a labelled manifest: '" + spec + "'");
    ToyCnnConfig config;
    config.epochs = o.cnn_epochs;
    config.seed = o.seed;
    return toy_cnn_model(read_manifest(rest), config);
  }
  if (kind == "windowed") {
    const auto [w, inner] = split_kind(rest);
    const auto window = detail::parse_int(w);
    if (!window || *window < 1 || inner.empty()) {
      throw ConfigError("expected windowed:<W>:<inner spec>, got '" + spec + "'");
    }
    return windowed_model(build_model(inner, o), static_cast<int>(*window));
  }
  if (kind == "external") {
    if (rest.empty()) throw ConfigError("external model needs a command");
    return external_model({rest, "external", std::chrono::milliseconds(o.external_timeout_ms)});
  }
  throw ConfigError("unknown model kind in '" + spec + "'");
}

bool is_id_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string slug(const std::string& id) {
  std::string out;
  for (char c : id) out += is_id_char(c) ? c : '_';
  return out;
}

// Splits an optional "<id>=" prefix off a model spec.
std::pair<std::string, std::string> split_id(const std::string& spec) {
  const auto eq = spec.find('=');
  const auto colon = spec.find(':');
  if (eq != std::string::npos && eq > 0 && (colon == std::string::npos || eq < colon) &&
      std::all_of(spec.begin(), spec.begin() + static_cast<long>(eq), is_id_char)) {
    return {spec.substr(0, eq), spec.substr(eq + 1)};
  }
  return {"", spec};
}

}  // namespace

NamedModel parse_model_spec(const std::string& spec, const ModelSpecOptions& options) {
  auto [id, body] = split_id(spec);
  if (id.empty()) {
    id = body;
    std::replace(id.begin(), id.end(), ',', ';');
    std::replace(id.begin(), id.end(), '\n', ' ');
  }
  return {id, build_model(body, options)};
}

MetamorphicRelation parse_transform_spec(const std::string& spec) {
  const auto [kind, rest] = split_kind(spec);
  if (kind == "identity") return identity_relation();
  BaselineParams p;
  auto args = rest.empty() ? std::vector<std::string>{} : detail::split(rest, kind == "affine" ? ',' : ':');
  const BaselineKind k = parse_baseline_kind(kind);
  switch (k) {
    case BaselineKind::Fog:
      if (args.size() != 1) throw ConfigError("expected fog:<weight>, got '" + spec + "'");
      p.fog_weight = spec_number(args[0], spec);
      break;
    case BaselineKind::Blur:
      if (args.size() != 1) throw ConfigError("expected blur:<sigma>, got '" + spec + "'");
      p.sigma = spec_number(args[0], spec);
      break;
    case BaselineKind::Rain:
      if (args.size() > 2) throw ConfigError("expected rain[:<density>[:<seed>]], got '" + spec + "'");
      if (!args.empty()) p.rain_density = spec_number(args[0], spec);
      if (args.size() == 2) {
        const auto seed = detail::parse_int(args[1]);
        if (!seed || *seed < 0) throw ConfigError("bad rain seed in '" + spec + "'");
        p.seed = static_cast<std::uint64_t>(*seed);
      }
      break;
    case BaselineKind::Affine:
      if (args.size() != 6) {
        throw ConfigError("expected affine:<m00>,<m01>,<m10>,<m11>,<tx>,<ty>, got '" + spec + "'");
      }
      for (int i = 0; i < 4; ++i) p.matrix[i] = spec_number(args[i], spec);
      p.tx = spec_number(args[4], spec);
      p.ty = spec_number(args[5], spec);
      break;
  }
  MetamorphicRelation mr = baseline_transform(k, p);
  mr.name = spec;
  return mr;
}

void CampaignConfig::validate() const {
  if (original_manifest.empty()) throw ConfigError("an original manifest is required");
  if (!fs::exists(original_manifest)) {
    throw IngestionError("original manifest not found: " + original_manifest.string());
  }
  if (transformed_manifest.empty() == transform.empty()) {
    throw ConfigError("give exactly one of a transformed manifest or a transform");
  }
  if (!transformed_manifest.empty() && !fs::exists(transformed_manifest)) {
    throw IngestionError("transformed manifest not found: " + transformed_manifest.string());
  }
  if (!transform.empty()) parse_transform_spec(transform);
  if (out_dir.empty()) throw ConfigError("an output directory is required");
  if (models.empty()) throw ConfigError("at least one model is required");
  parse_bounds(bounds);
  if (grid_rows < 0) throw ConfigError("grid rows must be non-negative");
  if (cnn_epochs < 0) throw ConfigError("cnn epochs must be non-negative");
  for (const auto& m : models) {
    const auto [kind, rest] = split_kind(split_id(m).second);
    if (kind == "cnn" && !fs::exists(rest)) {
      throw IngestionError("cnn training manifest not found: " + rest);
    }
  }
}

// ---------------------------------------------------------------------------
// Commands.

namespace {

constexpr int kMaxGridRows = 64;

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::set<std::string> known = {".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".tif", ".tiff"};
  return known.count(ext) > 0;
}

struct PrepareArgs {
  fs::path input, out, exclude, labels;
  std::string dataset_id, domain = "S1", alias, provenance;
  std::size_t stride = 1, budget = 0;
  bool labels_radians = false;
  std::uint64_t seed = 0;
};

void cmd_prepare(const PrepareArgs& a, std::ostream& out, std::ostream& err) {
  if (!fs::exists(a.input)) throw IngestionError("input not found: " + a.input.string());
  if (a.stride < 1) throw ConfigError("stride must be at least 1");
  const std::set<std::string> exclusions =
      a.exclude.empty() ? std::set<std::string>{} : read_exclusion_list(a.exclude);
  std::map<std::string, double> labels;
  if (!a.labels.empty()) {
    for (const auto& p : read_predictions(a.labels)) {
      labels[p.frame_id] = a.labels_radians ? p.degrees * 180.0 / 3.14159265358979323846 : p.degrees;
    }
  }

  DatasetManifest manifest;
  manifest.dataset_id = a.dataset_id.empty() ? a.input.stem().string() : a.dataset_id;
  manifest.domain = {parse_domain(a.domain), a.alias};
  manifest.provenance = a.provenance;
  const fs::path frames_dir = a.out / "frames";
  fs::create_directories(frames_dir);

  auto emit = [&](const std::string& id, const Image& raw) {
    const Image img = normalize_frame(raw);
    const fs::path rel = fs::path("frames") / (id + ".png");
    write_png(a.out / rel, img);
    ManifestEntry e{rel, std::nullopt, true};
    if (auto it = labels.find(id); it != labels.end()) e.steering_degrees = it->second;
    manifest.entries.push_back(std::move(e));
  };

  if (fs::is_directory(a.input)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.input)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw EmptyInputError("no image files in " + a.input.string());
    const std::size_t stride = a.budget > 0 ? stride_for_budget(files.size(), a.budget) : a.stride;
    for (std::size_t i = 0; i < files.size(); i += stride) {
      Image raw;
      try {
        raw = read_image(files[i]);
      } catch (const DataError& e) {
        throw IngestionError(files[i].string() + ": " + e.what());
      }
      emit(files[i].stem().string(), raw);
    }
  } else {
    std::size_t stride = a.stride;
    if (a.budget > 0) stride = stride_for_budget(count_video_frames(a.input), a.budget);
    extract_frames(a.input, stride, [&](std::size_t index, const Image& raw) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%06zu", manifest.dataset_id.c_str(), index);
      emit(id, raw);
    });
  }

  auto filtered = filter_frames(manifest, exclusions);
  for (const auto& id : filtered.unknown_ids) {
    err << "warning: excluded id " << id << " matches no frame\n";
  }
  write_manifest(a.out / "manifest.tsv", filtered.manifest);
  out << "prepared " << filtered.manifest.entries.size() << " frames ("
      << filtered.manifest.included_count() << " included) -> " << (a.out / "manifest.tsv").string()
      << '\n';
}

struct TrainArgs {
  fs::path s1, s2, out, resume;
  ArchitectureOptions arch;
  TrainConfig config;
  std::string distance = "mae";
  bool no_noise = false;
};

void cmd_train(TrainArgs a, std::ostream& out) {
  a.config.weights.distance = a.distance == "mse" ? Distance::MeanSquared : Distance::MeanAbsolute;
  if (a.distance != "mae" && a.distance != "mse") throw ConfigError("distance must be mae or mse");
  a.config.latent_noise = !a.no_noise;
  a.config.validate();
  const auto m1 = read_manifest(a.s1);
  const auto m2 = read_manifest(a.s2);
  if (m1.domain.value == m2.domain.value) {
    throw ConfigError("training manifests must come from distinct domains");
  }
  const auto& ms1 = m1.domain.value == Domain::S1 ? m1 : m2;
  const auto& ms2 = m1.domain.value == Domain::S1 ? m2 : m1;
  if (ms1.included_count() == 0 || ms2.included_count() == 0) {
    throw EmptyInputError("both training manifests need included frames");
  }
  fs::create_directories(a.out);
  const fs::path ckpt_path = a.out / "translator.ckpt";

  TrainingState state;
  std::uint64_t seed = a.config.seed;
  if (!a.resume.empty()) {
    auto ck = load_checkpoint(a.resume);
    state = std::move(ck.state);
    seed = ck.seed;
  } else {
    state = start_training(make_translator(a.arch, a.config.seed), a.config);
  }
  const auto c1 = load_corpus(ms1, state.params.height, state.params.width);
  const auto c2 = load_corpus(ms2, state.params.height, state.params.width);

  std::vector<TrainLogRow> log;
  TrainCallbacks callbacks;
  callbacks.on_step = [&](const TrainLogRow& row) { log.push_back(row); };
  callbacks.on_checkpoint = [&](const TrainingState& s) {
    save_checkpoint(ckpt_path, {s, seed, ms1.domain.alias, ms2.domain.alias});
  };
  try {
    auto result = train(std::move(state), c1, c2, a.config, callbacks);
    if (result.log.empty()) {
      save_checkpoint(ckpt_path, {result.state, seed, ms1.domain.alias, ms2.domain.alias});
    }
  } catch (const TrainingDivergence&) {
    write_training_log(a.out / "train_log.csv", log);
    throw;
  }
  write_training_log(a.out / "train_log.csv", log);
  out << "trained " << log.size() << " steps -> " << ckpt_path.string() << '\n';
}

struct TranslateArgs {
  fs::path checkpoint, manifest, out;
  std::string transform, from, to, dataset_id, alias;
  std::uint64_t seed = 0;
};

void cmd_translate(const TranslateArgs& a, std::ostream& out) {
  if (a.checkpoint.empty() == a.transform.empty()) {
    throw ConfigError("give exactly one of --checkpoint or --transform");
  }
  const auto source = read_manifest(a.manifest);
  const Domain from = a.from.empty() ? source.domain.value : parse_domain(a.from);
  const Domain to = a.to.empty() ? other(from) : parse_domain(a.to);

  MetamorphicRelation mr;
  std::string alias = a.alias;
  if (!a.checkpoint.empty()) {
    const auto ck = load_checkpoint(a.checkpoint);
    mr = translator_relation(ck.state.params, from, to);
    if (alias.empty()) alias = to == Domain::S1 ? ck.alias_s1 : ck.alias_s2;
  } else {
    mr = parse_transform_spec(a.transform);
    if (alias.empty()) alias = a.transform;
  }

  DatasetManifest result;
  result.dataset_id = a.dataset_id.empty() ? source.dataset_id + "-" + slug(alias.empty() ? to_string(to) : alias)
                                           : a.dataset_id;
  result.domain = {to, alias};
  result.provenance = "translated from " + source.dataset_id + " (" + mr.name + ")";
  fs::create_directories(a.out / "frames");
  FrameStream stream(source);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const FrameRecord t = apply_relation(mr, stream.load(i));
    const fs::path rel = fs::path("frames") / (t.frame_id + ".png");
    write_png(a.out / rel, t.image);
    result.entries.push_back({rel, t.steering_degrees, true});
  }
  write_manifest(a.out / "manifest.tsv", result);
  out << "translated " << result.entries.size() << " frames -> "
      << (a.out / "manifest.tsv").string() << '\n';
}

void check_alignment(const FrameStream& a, const FrameStream& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.frame_id(i) != b.frame_id(i)) {
      throw PairingError("manifests are misaligned at position " + std::to_string(i) +
                         ": first mismatched id " + a.frame_id(i) + " vs " + b.frame_id(i));
    }
  }
  if (a.size() != b.size()) {
    const auto& longer = a.size() > b.size() ? a : b;
    throw PairingError("manifests are misaligned: first mismatched id " + longer.frame_id(n) +
                       " has no counterpart");
  }
}

void cmd_test(const CampaignConfig& c, std::ostream& out) {
  c.validate();
  const auto bounds = parse_bounds(c.bounds);
  const auto original_manifest = read_manifest(c.original_manifest);
  FrameStream original(original_manifest);
  if (original.size() == 0) throw EmptyInputError("original manifest has no included frames");

  std::optional<FrameStream> transformed;
  std::optional<MetamorphicRelation> mr;
  std::string scene = c.scene_id;
  if (!c.transformed_manifest.empty()) {
    const auto tm = read_manifest(c.transformed_manifest);
    transformed.emplace(tm);
    check_alignment(original, *transformed);
    if (scene.empty()) scene = tm.domain.alias.empty() ? tm.dataset_id : tm.domain.alias;
  } else {
    mr = parse_transform_spec(c.transform);
    if (scene.empty()) scene = c.transform;
  }
  std::replace(scene.begin(), scene.end(), ',', ';');

  ModelSpecOptions options{c.seed, c.cnn_epochs, c.external_timeout_ms};
  std::vector<NamedModel> models;
  for (const auto& spec : c.models) models.push_back(parse_model_spec(spec, options));

  fs::create_directories(c.out_dir / "predictions");
  std::vector<InconsistencyReport> reports;
  for (auto& [id, model] : models) {
    const auto p_orig = run_model(*model, original);
    const auto p_trans = transformed ? run_model(*model, *transformed) : run_model(*model, original, &*mr);
    const auto pairs = pair_predictions(p_orig, p_trans);
    const auto stem = slug(id);
    write_predictions(c.out_dir / "predictions" / (stem + "_original.csv"), p_orig);
    write_predictions(c.out_dir / "predictions" / (stem + "_transformed.csv"), p_trans);
    {
      std::ofstream svg(c.out_dir / "predictions" / (stem + ".svg"));
      svg << predictions_plot_svg(pairs, id + " / " + scene);
    }
    reports.push_back(make_report(id, scene, pairs, bounds, c.flags));
    validate_report(reports.back());

    const int rows = std::min<int>({c.grid_rows, kMaxGridRows, static_cast<int>(pairs.size())});
    if (rows > 0) {
      fs::create_directories(c.out_dir / "grids");
      std::vector<GridRow> grid;
      for (int i = 0; i < rows; ++i) {
        FrameRecord o = original.load(static_cast<std::size_t>(i));
        Image t = transformed ? transformed->load(static_cast<std::size_t>(i)).image
                              : apply_relation(*mr, o).image;
        grid.push_back({o.frame_id, std::move(o.image), std::move(t), pairs[i].angle_original,
                        pairs[i].angle_transformed});
      }
      write_png(c.out_dir / "grids" / (stem + ".png"), render_grid(grid));
    }
  }
  write_reports(c.out_dir / "report.csv", reports);
  if (c.flags) write_flags(c.out_dir / "flags.csv", reports);
  for (const auto& r : reports) {
    out << r.model_id << " / " << r.scene_id << ":";
    for (const auto& row : r.rows) {
      out << "  eps " << detail::format_double(row.epsilon) << " -> " << row.count << "/"
          << row.total_frames;
    }
    out << '\n';
  }
}

void cmd_report(const std::vector<fs::path>& inputs, const fs::path& out_dir, std::ostream& out) {
  std::vector<InconsistencyReport> all;
  for (const auto& path : inputs) {
    auto reports = read_reports(path);
    for (auto& r : reports) {
      try {
        validate_report(r);
      } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
      }
      all.push_back(std::move(r));
    }
  }
  if (all.empty()) throw EmptyInputError("no report rows in the inputs");
  const auto table = aggregate_reports(all);
  fs::create_directories(out_dir);
  write_reports(out_dir / "merged_report.csv", all);
  write_table_csv(out_dir / "table.csv", table);
  write_table_markdown(out_dir / "table.md", table);
  {
    std::ofstream svg(out_dir / "counts.svg");
    svg << counts_plot_svg(table);
  }
  std::ifstream md(out_dir / "table.md");
  out << md.rdbuf();
  out << table.cell_count() << " cells (" << table.scenes.size() << " scenes x "
      << table.models.size() << " models x " << table.epsilons.size() << " bounds)\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Metamorphic testing of steering models with learned scene translation", "drivemt"};
  app.set_config("--config", "", "INI file with one section per verb; flags override it");
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Normalize a video or image directory into a manifest");
  prepare->add_option("--input", prep.input, "Video file or image directory")->required();
  prepare->add_option("--out", prep.out, "Output directory")->required();
  prepare->add_option("--dataset-id", prep.dataset_id);
  prepare->add_option("--domain", prep.domain)->check(CLI::IsMember({"S1", "S2"}));
  prepare->add_option("--alias", prep.alias, "Readable domain name, e.g. fine or snowy");
  prepare->add_option("--provenance", prep.provenance);
  prepare->add_option("--stride", prep.stride)->check(CLI::PositiveNumber);
  prepare->add_option("--budget", prep.budget, "Keep at most this many frames (overrides --stride)");
  prepare->add_option("--exclude", prep.exclude, "Frame ids to exclude, one per line");
  prepare->add_option("--labels", prep.labels, "CSV frame_id,angle_degrees");
  prepare->add_flag("--labels-radians", prep.labels_radians, "Label file holds radians");
  prepare->add_option("--seed", prep.seed);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the two-domain translator");
  train_cmd->add_option("--s1", tr.s1, "Manifest of one domain")->required();
  train_cmd->add_option("--s2", tr.s2, "Manifest of the other domain")->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--resume", tr.resume, "Continue from a checkpoint");
  train_cmd->add_option("--preset", tr.arch.preset)
      ->check(CLI::IsMember({"tiny", "toy8", "toy32", "full", "linear"}));
  train_cmd->add_option("--height", tr.arch.height);
  train_cmd->add_option("--width", tr.arch.width);
  train_cmd->add_option("--latent-dim", tr.arch.latent_dim);
  train_cmd->add_option("--steps", tr.config.steps);
  train_cmd->add_option("--batch-size", tr.config.batch_size);
  train_cmd->add_option("--lr-generator", tr.config.lr_generator);
  train_cmd->add_option("--lr-discriminator", tr.config.lr_discriminator);
  train_cmd->add_option("--w-vae", tr.config.weights.vae);
  train_cmd->add_option("--w-gan", tr.config.weights.gan);
  train_cmd->add_option("--w-cc", tr.config.weights.cc);
  train_cmd->add_option("--w-prior", tr.config.weights.prior);
  train_cmd->add_option("--distance", tr.distance)->check(CLI::IsMember({"mae", "mse"}));
  train_cmd->add_option("--checkpoint-interval", tr.config.checkpoint_interval);
  train_cmd->add_flag("--no-latent-noise", tr.no_noise);
  train_cmd->add_option("--seed", tr.config.seed);

  TranslateArgs tl;
  auto* translate_cmd = app.add_subcommand("translate", "Translate every included frame of a manifest");
  translate_cmd->add_option("--manifest", tl.manifest)->required();
  translate_cmd->add_option("--out", tl.out)->required();
  translate_cmd->add_option("--checkpoint", tl.checkpoint);
  translate_cmd->add_option("--transform", tl.transform, "Baseline transform instead of a checkpoint");
  translate_cmd->add_option("--from", tl.from)->check(CLI::IsMember({"S1", "S2"}));
  translate_cmd->add_option("--to", tl.to)->check(CLI::IsMember({"S1", "S2"}));
  translate_cmd->add_option("--dataset-id", tl.dataset_id);
  translate_cmd->add_option("--alias", tl.alias);
  translate_cmd->add_option("--seed", tl.seed);

  CampaignConfig campaign;
  auto* test_cmd = app.add_subcommand("test", "Count inconsistencies between original and transformed scenes");
  test_cmd->add_option("--original", campaign.original_manifest)->required();
  test_cmd->add_option("--transformed", campaign.transformed_manifest);
  test_cmd->add_option("--transform", campaign.transform, "Apply a baseline transform on the fly");
  test_cmd->add_option("--model", campaign.models, "Model spec, repeatable")->required();
  test_cmd->add_option("--out", campaign.out_dir)->required();
  test_cmd->add_option("--bounds", campaign.bounds, "Error bounds in degrees")->delimiter(',');
  test_cmd->add_option("--scene", campaign.scene_id);
  test_cmd->add_flag("--flags", campaign.flags, "Write per-frame flags");
  test_cmd->add_option("--grid", campaign.grid_rows, "Rows of side-by-side grid images (max 64)");
  test_cmd->add_option("--cnn-epochs", campaign.cnn_epochs);
  test_cmd->add_option("--external-timeout-ms", campaign.external_timeout_ms);
  test_cmd->add_option("--seed", campaign.seed);

  std::vector<fs::path> report_inputs;
  fs::path report_out;
  std::uint64_t report_seed = 0;
  auto* report_cmd = app.add_subcommand("report", "Merge report files into a table and plots");
  report_cmd->add_option("--input", report_inputs, "Report CSV, repeatable")->required();
  report_cmd->add_option("--out", report_out)->required();
  report_cmd->add_option("--seed", report_seed);

  std::vector<std::string> argv_copy(args.rbegin(), args.rend());
  try {
    app.parse(argv_copy);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "drivemt: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (prepare->parsed()) cmd_prepare(prep, out, err);
    else if (train_cmd->parsed()) cmd_train(tr, out);
    else if (translate_cmd->parsed()) cmd_translate(tl, out);
    else if (test_cmd->parsed()) cmd_test(campaign, out);
    else if (report_cmd->parsed()) cmd_report(report_inputs, report_out, out);
  } catch (const ConfigError& e) {
    err << "drivemt: invalid configuration: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "drivemt: data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "drivemt: " << e.what() << '\n';
    return kExitRuntimeFailure;
  }
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace drivemt
