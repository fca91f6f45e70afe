#include "wes/cli.hpp"

#include <cstdio>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "wes/analytics.hpp"
#include "wes/base64.hpp"
#include "wes/bench.hpp"
#include "wes/codec.hpp"
#include "wes/config.hpp"
#include "wes/dicom.hpp"
#include "wes/encoder.hpp"
#include "wes/error.hpp"
#include "wes/fixtures.hpp"
#include "wes/io.hpp"
#include "wes/service.hpp"
#include "wes/stubs.hpp"
#include "wes/swsi.hpp"

namespace wes::cli {

using nlohmann::json;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::FetchFailed:
    case ErrorCode::TargetUnreachable:
    case ErrorCode::DeadlineExceeded:
    case ErrorCode::IoFailure:
      return 2;
    default:
      return 1;
  }
}

void emit_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
}

std::vector<double> parse_fraction_list(const std::string& text) {
  std::vector<double> fractions;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      fractions.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadFlag, "bad fraction '" + item + "'");
    }
  }
  if (fractions.empty()) throw Error(ErrorCode::BadFlag, "empty fraction list");
  return fractions;
}

Image make_pattern(const std::string& pattern, uint32_t rows, uint32_t cols, uint8_t fill,
                   uint64_t seed) {
  if (pattern == "gradient") return synth_gradient(rows, cols);
  if (pattern == "smooth") return synth_smooth(rows, cols);
  if (pattern == "uniform") return synth_uniform(rows, cols, fill);
  if (pattern == "two-region") return synth_two_region(rows, cols, 10, 245);
  if (pattern == "noise") return synth_noise(rows, cols, seed);
  throw Error(ErrorCode::BadFlag, "unknown pattern '" + pattern + "'");
}

// ---------------------------------------------------------------------------
// embed

int run_embed(const std::string& image_path, const EncoderSpec& spec, std::ostream& out) {
  std::vector<uint8_t> bytes = read_file(image_path);
  Image image = decode_image(bytes);
  Patch patch;
  patch.spec = {0, 0, image.cols, image.rows};
  patch.pixels = std::move(image.pixels);

  ReferenceEncoder encoder(spec);
  EmbeddingVector vec = encoder.embed(patch);
  char buf[32];
  for (size_t d = 0; d < vec.size(); ++d) {
    std::snprintf(buf, sizeof(buf), "%.17g", vec[d]);
    out << (d == 0 ? "" : ",") << buf;
  }
  out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// parse

int run_parse(const std::string& wsi_path, std::ostream& out) {
  std::vector<uint8_t> bytes = read_file(wsi_path);
  ParsedWsi parsed = parse_wsi(bytes);
  const WsiMetadata& meta = parsed.meta;
  json doc = {{"total_rows", meta.total_rows},
              {"total_cols", meta.total_cols},
              {"frame_rows", meta.frame_rows},
              {"frame_cols", meta.frame_cols},
              {"frame_count", meta.frame_count},
              {"frames_per_row", meta.frames_per_row},
              {"transfer_syntax", transfer_syntax_name(meta.transfer_syntax)},
              {"organization", "TILED_FULL"}};
  out << doc.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// make-fixtures

struct FixtureArgs {
  uint32_t rows = 1024;
  uint32_t cols = 1024;
  uint32_t frame_rows = 256;
  uint32_t frame_cols = 256;
  std::string codec = "raw";
  std::string pattern = "gradient";
  std::string format = "swsi";
  uint32_t fill = 128;
  uint64_t seed = 1;
  int jpeg_quality = 95;
  std::string out_path;
};

int run_make_fixtures(const FixtureArgs& args, std::ostream& out) {
  Image bitmap = make_pattern(args.pattern, args.rows, args.cols,
                              static_cast<uint8_t>(args.fill), args.seed);
  TransferSyntax ts;
  if (args.codec == "raw") {
    ts = TransferSyntax::UncompressedRgb8;
  } else if (args.codec == "jpeg") {
    ts = TransferSyntax::BaselineJpeg;
  } else {
    throw Error(ErrorCode::BadFlag, "codec must be raw or jpeg");
  }

  if (args.format == "swsi") {
    write_file(args.out_path,
               write_swsi(bitmap, args.frame_rows, args.frame_cols, ts, args.jpeg_quality));
  } else if (args.format == "dicom") {
    DicomWriteOptions opts;
    opts.jpeg_quality = args.jpeg_quality;
    write_file(args.out_path, write_dicom(bitmap, args.frame_rows, args.frame_cols, ts, opts));
  } else if (args.format == "png") {
    write_file(args.out_path, encode_png(bitmap));
  } else if (args.format == "jpeg") {
    write_file(args.out_path, encode_jpeg(bitmap, args.jpeg_quality));
  } else {
    throw Error(ErrorCode::BadFlag, "format must be swsi, dicom, png or jpeg");
  }
  out << "wrote " << args.out_path << " (" << args.format << ", " << args.cols << "x"
      << args.rows << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// probe

struct ProbeArgs {
  std::string embeddings_path;
  std::string labels_path;
  std::string probe = "linear";
  std::string fractions = "1.0";
  uint32_t seeds = 5;
  std::string out_path;
  std::string task;
  double eval_fraction = 0.5;
};

int run_probe(const ProbeArgs& args, std::ostream& out) {
  EmbeddingTable table = load_embeddings_csv(args.embeddings_path);
  auto labels = load_labels_csv(args.labels_path);
  std::string task = args.task;
  if (task.empty()) {
    task = args.embeddings_path;
    if (auto slash = task.find_last_of('/'); slash != std::string::npos) {
      task = task.substr(slash + 1);
    }
    if (auto dot = task.find_last_of('.'); dot != std::string::npos) task = task.substr(0, dot);
  }
  LabeledEmbeddingSet data = join_labeled_set(table, labels, task);

  std::vector<double> fractions = parse_fraction_list(args.fractions);
  std::vector<uint64_t> seeds;
  for (uint32_t s = 1; s <= args.seeds; ++s) seeds.push_back(s);

  SweepOptions opts;
  opts.eval_fraction = args.eval_fraction;
  std::vector<SweepRecord> records =
      data_efficiency_sweep(data, fractions, parse_probe_kind(args.probe), seeds, opts);
  std::string csv = sweep_csv(records);
  if (!args.out_path.empty()) write_file(args.out_path, csv);
  out << csv;
  return 0;
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterArgs {
  std::string wsi_path;
  uint32_t k = 4;
  uint64_t seed = 1;
  uint32_t stride = 224;
  uint32_t cell_px = 16;
  std::string out_path;
  std::string csv_path;
  EncoderSpec encoder;
};

int run_cluster(const ClusterArgs& args, std::ostream& out) {
  std::vector<uint8_t> bytes = read_file(args.wsi_path);
  ParsedWsi parsed = parse_wsi(bytes);
  ReferenceEncoder encoder(args.encoder);
  OverlayResult overlay = cluster_overlay(parsed.meta, parsed.index, bytes, encoder, args.k,
                                          args.seed, args.stride);
  write_file(args.out_path, encode_png(overlay_image(overlay, args.cell_px)));
  std::string csv_path = args.csv_path;
  if (csv_path.empty()) {
    csv_path = args.out_path;
    if (auto dot = csv_path.find_last_of('.'); dot != std::string::npos) {
      csv_path = csv_path.substr(0, dot);
    }
    csv_path += ".csv";
  }
  write_file(csv_path, overlay_csv(overlay));
  out << "clusters: " << args.k << ", grid " << overlay.grid_cols << "x" << overlay.grid_rows
      << ", iterations " << overlay.clusters.inertia_history.size() << ", inertia "
      << overlay.clusters.inertia() << "\n";
  out << "wrote " << args.out_path << " and " << csv_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string target;
  std::string sources = "inline";
  unsigned concurrency = 10;
  uint32_t per_request = 5000;
  uint64_t total = 50000;
  double hourly_price = 3.12;
  std::string out_path;
  std::string layout;  // "", "per-patch", "per-request"
  uint64_t seed = 1;
  std::string object_uri;
  std::string dicomweb_base, study_uid, series_uid, instance_uid;
  std::string inline_image;  // path to a PNG to send inline
};

int run_bench(const BenchArgs& args, std::ostream& out) {
  std::vector<std::string> kinds;
  {
    std::stringstream ss(args.sources);
    std::string item;
    while (std::getline(ss, item, ',')) kinds.push_back(item);
  }
  if (kinds.empty()) throw Error(ErrorCode::BadFlag, "--source requires a value");

  std::optional<RequestLayout> layout;
  if (args.layout == "per-patch") layout = RequestLayout::PerPatch;
  else if (args.layout == "per-request") layout = RequestLayout::PerRequest;
  else if (!args.layout.empty()) {
    throw Error(ErrorCode::BadFlag, "--layout must be per-patch or per-request");
  }

  // fixtures: a caller-supplied URI wins; otherwise a localhost stub serves
  // generated fixtures so every source kind runs offline
  std::optional<StubServer> stub;
  auto ensure_stub = [&]() -> StubServer& {
    if (!stub.has_value()) {
      stub.emplace();
      stub->add_blob("/fixtures/patch.png", encode_png(synth_smooth(224, 224)), "image/png");
      stub->add_blob("/fixtures/slide.png", encode_png(synth_smooth(1024, 1024)), "image/png");
      stub->add_wsi("1.2.0", "1.2.1", "1.2.2",
                    write_swsi(synth_gradient(1024, 1024), 256, 256,
                               TransferSyntax::UncompressedRgb8));
      stub->start();
    }
    return *stub;
  };

  std::string inline_b64_patch;
  if (!args.inline_image.empty()) {
    std::vector<uint8_t> bytes = read_file(args.inline_image);
    if (sniff_image_format(bytes) != ImageFormat::Png) {
      throw Error(ErrorCode::BadFlag, "--inline-image must be a PNG");
    }
    inline_b64_patch = base64_encode(bytes);
  }

  std::vector<BenchmarkReport> reports;
  for (const std::string& kind_name : kinds) {
    BenchmarkConfig cfg;
    cfg.source_kind = parse_source_kind(kind_name);
    cfg.target = args.target;
    cfg.concurrency = args.concurrency;
    cfg.embeddings_per_request = args.per_request;
    cfg.total_embeddings = args.total;
    cfg.hourly_price = args.hourly_price;
    cfg.layout = layout;
    cfg.seed = args.seed;

    switch (cfg.source_kind) {
      case SourceKind::Inline:
        if (!inline_b64_patch.empty()) {
          cfg.inline_base64 = inline_b64_patch;
        } else {
          bool whole_image = cfg.effective_layout() == RequestLayout::PerPatch;
          Image fixture = whole_image ? synth_smooth(224, 224) : synth_smooth(1024, 1024);
          auto png = encode_png(fixture);
          cfg.inline_base64 = base64_encode(png);
        }
        break;
      case SourceKind::Object:
        cfg.object_uri = !args.object_uri.empty()
                             ? args.object_uri
                             : ensure_stub().base_url() +
                                   (cfg.effective_layout() == RequestLayout::PerPatch
                                        ? "/fixtures/patch.png"
                                        : "/fixtures/slide.png");
        break;
      case SourceKind::DicomWeb:
        if (!args.dicomweb_base.empty()) {
          cfg.dicomweb = {args.dicomweb_base, args.study_uid, args.series_uid,
                          args.instance_uid};
        } else {
          cfg.dicomweb = ensure_stub().dicomweb_ref("1.2.0", "1.2.1", "1.2.2");
        }
        break;
    }
    reports.push_back(run_benchmark(cfg));
  }

  std::string csv = compare_sources_csv(reports);
  if (!args.out_path.empty()) write_file(args.out_path, csv);
  out << csv;
  for (const auto& report : reports) {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%s: %llu requests, %.2f s, %.0f embeddings/hour, %llu errors\n",
                  report.source.c_str(),
                  static_cast<unsigned long long>(report.requests_issued), report.elapsed_s,
                  report.embeddings_per_hour,
                  static_cast<unsigned long long>(report.error_count));
    out << line;
  }
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  static const std::set<std::string> known = {"serve",   "embed", "bench",         "probe",
                                              "cluster", "parse", "make-fixtures"};
  if (argc >= 2 && argv[1][0] != '-' && known.find(argv[1]) == known.end()) {
    emit_error(err, error_code_name(ErrorCode::UnknownSubcommand),
               std::string("unknown subcommand '") + argv[1] + "'");
    return 1;
  }

  CLI::App app{"whole-slide patch embedding service and evaluation toolkit", "wes"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "run the embedding HTTP service");
  std::optional<std::string> config_path;
  serve->add_option("--config", config_path, "key=value config file");
  std::map<std::string, std::string> flag_overrides;
  auto bind_key = [&](CLI::App* cmd, const std::string& flag, const std::string& key,
                      const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&flag_overrides, key](const std::string& v) { flag_overrides[key] = v; }, help);
  };
  bind_key(serve, "--port", "port", "listen port");
  bind_key(serve, "--max-patches-per-request", "max_patches_per_request",
           "request size limit in patches");
  bind_key(serve, "--workers", "workers", "patch worker threads (0 = cpu count)");
  bind_key(serve, "--encoder-name", "encoder.name", "encoder implementation name");
  bind_key(serve, "--encoder-dim", "encoder.dim", "embedding dimension");
  bind_key(serve, "--encoder-seed", "encoder.seed", "encoder projection seed");
  bind_key(serve, "--fetch-timeout-ms", "fetch.timeout_ms", "upstream fetch timeout");
  bind_key(serve, "--fetch-bearer-token", "fetch.bearer_token",
           "bearer token for upstream fetches");
  bind_key(serve, "--cache-frames", "cache.frames", "per-source frame cache capacity");

  // embed
  auto* embed = app.add_subcommand("embed", "embed one 224x224 image file");
  std::string embed_image;
  EncoderSpec embed_spec;
  embed->add_option("--image", embed_image, "PNG or JPEG patch file")->required();
  embed->add_option("--encoder-dim", embed_spec.dim, "embedding dimension");
  embed->add_option("--encoder-seed", embed_spec.seed, "encoder projection seed");

  // bench
  auto* bench = app.add_subcommand("bench", "drive the service and report throughput/cost");
  BenchArgs bench_args;
  bench->add_option("--target", bench_args.target, "service base URL")->required();
  bench->add_option("--source", bench_args.sources,
                    "source kind(s): inline|object|dicomweb, comma-separated for a comparison");
  bench->add_option("--concurrency", bench_args.concurrency, "parallel request workers");
  bench->add_option("--per-request", bench_args.per_request, "embeddings per request");
  bench->add_option("--total", bench_args.total, "total embeddings");
  bench->add_option("--hourly-price", bench_args.hourly_price, "endpoint price per hour");
  bench->add_option("--out", bench_args.out_path, "CSV report path");
  bench->add_option("--layout", bench_args.layout, "per-patch or per-request");
  bench->add_option("--seed", bench_args.seed, "patch coordinate seed");
  bench->add_option("--object-uri", bench_args.object_uri, "image URL for the object kind");
  bench->add_option("--dicomweb-base", bench_args.dicomweb_base, "DICOMweb base URL");
  bench->add_option("--study", bench_args.study_uid, "DICOMweb study UID");
  bench->add_option("--series", bench_args.series_uid, "DICOMweb series UID");
  bench->add_option("--instance", bench_args.instance_uid, "DICOMweb instance UID");
  bench->add_option("--inline-image", bench_args.inline_image, "PNG sent by the inline kind");

  // probe
  auto* probe = app.add_subcommand("probe", "train probes over an embedding CSV");
  ProbeArgs probe_args;
  probe->add_option("--embeddings", probe_args.embeddings_path, "CSV id,e0..eN")->required();
  probe->add_option("--labels", probe_args.labels_path, "CSV id,label")->required();
  probe->add_option("--probe", probe_args.probe, "linear or mlp2");
  probe->add_option("--fractions", probe_args.fractions, "training fractions, e.g. 0.01,0.1,1.0");
  probe->add_option("--seeds", probe_args.seeds, "number of subsampling seeds");
  probe->add_option("--out", probe_args.out_path, "sweep CSV path");
  probe->add_option("--task", probe_args.task, "task name in the report");
  probe->add_option("--eval-fraction", probe_args.eval_fraction, "held-out fraction");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "k-means overlay over a tiled image");
  ClusterArgs cluster_args;
  cluster->add_option("--wsi", cluster_args.wsi_path, "SWSI or DICOM container")->required();
  cluster->add_option("--k", cluster_args.k, "cluster count");
  cluster->add_option("--seed", cluster_args.seed, "k-means seed");
  cluster->add_option("--stride", cluster_args.stride, "grid stride in pixels");
  cluster->add_option("--cell-px", cluster_args.cell_px, "overlay pixels per patch");
  cluster->add_option("--out", cluster_args.out_path, "overlay PNG path")->required();
  cluster->add_option("--csv", cluster_args.csv_path, "overlay CSV path");
  cluster->add_option("--encoder-dim", cluster_args.encoder.dim, "embedding dimension");
  cluster->add_option("--encoder-seed", cluster_args.encoder.seed, "encoder projection seed");

  // parse
  auto* parse = app.add_subcommand("parse", "print tiled container metadata as JSON");
  std::string parse_path;
  parse->add_option("--wsi", parse_path, "SWSI or DICOM container")->required();

  // make-fixtures
  auto* fixtures = app.add_subcommand("make-fixtures", "synthesize tiled containers and images");
  FixtureArgs fixture_args;
  fixtures->add_option("--rows", fixture_args.rows, "image rows");
  fixtures->add_option("--cols", fixture_args.cols, "image cols");
  fixtures->add_option("--frame-rows", fixture_args.frame_rows, "frame rows");
  fixtures->add_option("--frame-cols", fixture_args.frame_cols, "frame cols");
  fixtures->add_option("--codec", fixture_args.codec, "raw or jpeg");
  fixtures->add_option("--pattern", fixture_args.pattern,
                       "gradient|smooth|uniform|two-region|noise");
  fixtures->add_option("--fill", fixture_args.fill, "fill value for the uniform pattern");
  fixtures->add_option("--seed", fixture_args.seed, "seed for the noise pattern");
  fixtures->add_option("--quality", fixture_args.jpeg_quality, "JPEG quality");
  fixtures->add_option("--format", fixture_args.format, "swsi|dicom|png|jpeg");
  fixtures->add_option("--out", fixture_args.out_path, "output path")->required();

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::CallForHelp&) {
    auto parsed_subs = app.get_subcommands();
    out << (parsed_subs.empty() ? app.help() : parsed_subs.front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    emit_error(err, error_code_name(ErrorCode::BadFlag), e.what());
    return 1;
  }

  try {
    if (serve->parsed()) {
      ServiceConfig config = resolve_service_config(config_path, flag_overrides);
      EmbedService service(config);
      out << "listening on 0.0.0.0:" << config.port << "\n";
      if (!service.run()) {
        throw Error(ErrorCode::IoFailure,
                    "failed to listen on port " + std::to_string(config.port));
      }
      return 0;
    }
    if (embed->parsed()) return run_embed(embed_image, embed_spec, out);
    if (bench->parsed()) return run_bench(bench_args, out);
    if (probe->parsed()) return run_probe(probe_args, out);
    if (cluster->parsed()) return run_cluster(cluster_args, out);
    if (parse->parsed()) return run_parse(parse_path, out);
    if (fixtures->parsed()) return run_make_fixtures(fixture_args, out);
    emit_error(err, error_code_name(ErrorCode::UnknownSubcommand), "no subcommand given");
    return 1;
  } catch (const Error& e) {
    emit_error(err, error_code_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    emit_error(err, "Internal", e.what());
    return 2;
  }
}

}  // namespace wes::cli
