// Command-line front end for the SNN toolkit: rate-encode images, quantize
// and run networks (float reference or bit-accurate hardware model), compare
// the two, estimate throughput/energy metrics, and train the toy task.

#include <chrono>
#include <ctime>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snnkit/encoding.hpp"
#include "snnkit/hwmodel.hpp"
#include "snnkit/io.hpp"
#include "snnkit/network.hpp"
#include "snnkit/trainer.hpp"
#include "snnkit/version.hpp"

namespace {

using nlohmann::json;

// Exit codes: 0 success, 1 usage, 2 data/format, 3 numeric failure.
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

// Everything needed to reproduce the run bit-exactly: command, inputs,
// outputs, seeds, and flag values.  File manifests also carry a wall-clock
// timestamp; embedded copies omit it so command output stays byte-stable.
json make_manifest(const std::string& command, const json& params, const json& inputs,
                   const json& outputs, bool with_timestamp) {
    json m{{"tool", "snnkit"},
           {"version", snnkit::kVersion},
           {"command", command},
           {"params", params},
           {"inputs", inputs},
           {"outputs", outputs}};
    if (with_timestamp) m["timestamp_utc"] = utc_timestamp();
    return m;
}

void write_manifest(const std::string& path, const json& manifest) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write manifest: " + path);
    }
    out << manifest.dump(2) << "\n";
}

std::string default_manifest_path(const std::string& out_path) {
    return out_path + ".manifest.json";
}

std::string replace_extension(const std::string& path, const std::string& ext) {
    const size_t slash = path.find_last_of('/');
    const size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return path + ext;
    }
    return path.substr(0, dot) + ext;
}

bool is_snnw_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    char magic[4] = {};
    in.read(magic, 4);
    return in.gcount() == 4 && std::memcmp(magic, "SNNW", 4) == 0;
}

snnkit::NetworkConfig config_for(const std::string& config_path) {
    if (config_path.empty()) {
        snnkit::NetworkConfig cfg;
        cfg.hidden.threshold = 0.5;  // representable in Q1.15
        cfg.output.threshold = 0.5;
        return cfg;
    }
    return snnkit::load_config(config_path);
}

json trace_to_json(const std::vector<snnkit::StepTrace>& trace) {
    json steps = json::array();
    for (size_t t = 0; t < trace.size(); ++t) {
        steps.push_back({{"t", t},
                         {"hidden_u", trace[t].hidden_u},
                         {"hidden_spikes", trace[t].hidden_spikes},
                         {"output_u", trace[t].output_u},
                         {"output_spikes", trace[t].output_spikes}});
    }
    return steps;
}

json trace_to_json(const std::vector<snnkit::HwStepTrace>& trace) {
    json steps = json::array();
    for (size_t t = 0; t < trace.size(); ++t) {
        std::vector<double> hidden_u(trace[t].hidden_u.size());
        std::vector<double> output_u(trace[t].output_u.size());
        for (size_t i = 0; i < hidden_u.size(); ++i) {
            hidden_u[i] = snnkit::dequantize({trace[t].hidden_u[i], snnkit::q1_15});
        }
        for (size_t i = 0; i < output_u.size(); ++i) {
            output_u[i] = snnkit::dequantize({trace[t].output_u[i], snnkit::q1_15});
        }
        steps.push_back({{"t", t},
                         {"hidden_u", hidden_u},
                         {"hidden_spikes", trace[t].hidden_spikes},
                         {"output_u", output_u},
                         {"output_spikes", trace[t].output_spikes}});
    }
    return steps;
}

// --- encode ---------------------------------------------------------------

struct EncodeArgs {
    std::string image, out, manifest, resize;
    uint32_t timesteps = 25;
    uint64_t seed = 0;
};

void run_encode(const EncodeArgs& a) {
    snnkit::GrayImage img = snnkit::load_pgm(a.image);
    if (!a.resize.empty()) {
        int w = 0, h = 0;
        const size_t x = a.resize.find('x');
        try {
            if (x == std::string::npos) throw std::invalid_argument("no separator");
            w = std::stoi(a.resize.substr(0, x));
            h = std::stoi(a.resize.substr(x + 1));
        } catch (const std::exception&) {
            throw UsageError("--resize expects WxH, got " + a.resize);
        }
        img = snnkit::resize_nearest(img, w, h);
    }
    const snnkit::SpikeTrain train =
        snnkit::rate_encode(snnkit::normalize_image(img), a.timesteps, a.seed);
    snnkit::save_spike_train(a.out, train);

    const json manifest = make_manifest(
        "encode",
        {{"timesteps", a.timesteps}, {"seed", a.seed}, {"resize", a.resize}},
        {{"image", a.image}}, {{"spikes", a.out}}, true);
    write_manifest(a.manifest.empty() ? default_manifest_path(a.out) : a.manifest, manifest);

    std::cout << json{{"spikes", a.out},
                      {"timesteps", train.timesteps},
                      {"neurons", train.neurons},
                      {"seed", a.seed}}
                     .dump(2)
              << "\n";
}

// --- quantize ---------------------------------------------------------------

struct QuantizeArgs {
    std::string net, out, config_out, manifest;
};

void run_quantize(const QuantizeArgs& a) {
    const snnkit::Network net = snnkit::load_float_network(a.net);
    snnkit::QuantizeReport report;
    const snnkit::QuantizedNetwork qnet = snnkit::quantize_network(net, &report);
    snnkit::save_weights(a.out, qnet);
    const std::string config_out =
        a.config_out.empty() ? replace_extension(a.out, ".config.json") : a.config_out;
    snnkit::save_config(config_out, qnet.config);

    const json manifest =
        make_manifest("quantize", json::object(), {{"network", a.net}},
                      {{"weights", a.out}, {"config", config_out}}, true);
    write_manifest(a.manifest.empty() ? default_manifest_path(a.out) : a.manifest, manifest);

    std::cout << json{{"weights", a.out},
                      {"config", config_out},
                      {"values_total", report.total},
                      {"values_saturated", report.saturated}}
                     .dump(2)
              << "\n";
}

// --- infer ---------------------------------------------------------------

struct InferArgs {
    std::string net, config, spikes, mode = "hw";
    bool trace = false;
    std::string out, manifest;
};

void run_infer(const InferArgs& a) {
    snnkit::SpikeTrain spikes = snnkit::load_spike_train(a.spikes);
    snnkit::NetworkConfig cfg = config_for(a.config);
    cfg.timesteps = static_cast<int>(spikes.timesteps);
    snnkit::QuantizedNetwork qnet = snnkit::load_weights(a.net, cfg);

    json result{{"mode", a.mode},
                {"net", a.net},
                {"spikes", a.spikes},
                {"manifest",
                 make_manifest("infer",
                               {{"mode", a.mode}, {"trace", a.trace}, {"config", a.config}},
                               {{"net", a.net}, {"spikes", a.spikes}}, json::object(), false)}};

    if (a.mode == "float") {
        const snnkit::Network net = snnkit::dequantize_network(qnet);
        const snnkit::ForwardResult r = snnkit::forward(net, spikes, a.trace);
        result["prediction"] = r.prediction;
        result["spike_counts"] = r.spike_counts;
        if (a.trace) result["trace"] = trace_to_json(r.trace);
    } else if (a.mode == "hw") {
        const snnkit::HwForwardResult r = snnkit::hw_forward(qnet, spikes, a.trace);
        result["prediction"] = r.prediction;
        result["spike_counts"] = r.spike_counts;
        result["cycle_report"] = snnkit::cycle_report_to_json(r.report);
        result["saturations"] = {{"narrowing", r.diagnostics.narrow_saturations},
                                 {"arithmetic", r.diagnostics.arith_saturations}};
        result["op_categories"] = {{"additions", r.diagnostics.ops.additions},
                                   {"multiplications", r.diagnostics.ops.multiplications},
                                   {"comparisons", r.diagnostics.ops.comparisons}};
        if (a.trace) result["trace"] = trace_to_json(r.trace);
    } else {
        throw std::invalid_argument("--mode must be float or hw, got " + a.mode);
    }

    const std::string text = result.dump(2) + "\n";
    std::cout << text;
    if (!a.out.empty()) {
        std::ofstream out(a.out, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write result: " + a.out);
        out << text;
    }
    if (!a.manifest.empty()) {
        json m = result["manifest"];
        m["timestamp_utc"] = utc_timestamp();
        write_manifest(a.manifest, m);
    }
}

// --- compare ---------------------------------------------------------------

struct CompareArgs {
    std::string net, config, spikes, manifest;
    double tolerance = 0.01;
};

void run_compare(const CompareArgs& a) {
    snnkit::SpikeTrain spikes = snnkit::load_spike_train(a.spikes);
    snnkit::NetworkConfig cfg = config_for(a.config);
    cfg.timesteps = static_cast<int>(spikes.timesteps);

    snnkit::Network float_net;
    snnkit::QuantizedNetwork qnet;
    snnkit::QuantizeReport quantize_report;
    if (is_snnw_file(a.net)) {
        qnet = snnkit::load_weights(a.net, cfg);
        float_net = snnkit::dequantize_network(qnet);
    } else {
        float_net = snnkit::load_float_network(a.net);
        float_net.config.timesteps = cfg.timesteps;
        float_net.config.hidden.beta = cfg.hidden.beta;
        float_net.config.hidden.threshold = cfg.hidden.threshold;
        float_net.config.hidden.u_rest = cfg.hidden.u_rest;
        float_net.config.output.beta = cfg.output.beta;
        float_net.config.output.threshold = cfg.output.threshold;
        float_net.config.output.u_rest = cfg.output.u_rest;
        float_net.config.refractory_steps = cfg.refractory_steps;
        qnet = snnkit::quantize_network(float_net, &quantize_report);
    }

    const snnkit::ForwardResult fr = snnkit::forward(float_net, spikes, true);
    const snnkit::HwForwardResult hr = snnkit::hw_forward(qnet, spikes, true);

    uint64_t divergences = 0;
    json first_divergence;  // null until found
    auto scan_layer = [&](size_t t, const char* layer, const std::vector<double>& ref,
                          const std::vector<int64_t>& raw) {
        for (size_t i = 0; i < ref.size(); ++i) {
            const double hw_u = snnkit::dequantize({raw[i], snnkit::q1_15});
            const double diff = std::abs(ref[i] - hw_u);
            if (diff > a.tolerance) {
                ++divergences;
                if (first_divergence.is_null()) {
                    first_divergence = {{"step", t},
                                        {"layer", layer},
                                        {"neuron", i},
                                        {"float_u", ref[i]},
                                        {"hw_u", hw_u},
                                        {"abs_diff", diff}};
                }
            }
        }
    };
    for (size_t t = 0; t < fr.trace.size(); ++t) {
        scan_layer(t, "hidden", fr.trace[t].hidden_u, hr.trace[t].hidden_u);
        scan_layer(t, "output", fr.trace[t].output_u, hr.trace[t].output_u);
    }

    json result{
        {"prediction_float", fr.prediction},
        {"prediction_hw", hr.prediction},
        {"predictions_match", fr.prediction == hr.prediction},
        {"tolerance", a.tolerance},
        {"membrane_divergences", divergences},
        {"first_divergence", first_divergence},
        {"spike_counts_float", fr.spike_counts},
        {"spike_counts_hw", hr.spike_counts},
        {"quantize_saturations", quantize_report.saturated},
        {"hw_saturations",
         {{"narrowing", hr.diagnostics.narrow_saturations},
          {"arithmetic", hr.diagnostics.arith_saturations}}},
        {"manifest", make_manifest("compare",
                                   {{"tolerance", a.tolerance}, {"config", a.config}},
                                   {{"net", a.net}, {"spikes", a.spikes}}, json::object(),
                                   false)}};
    std::cout << result.dump(2) << "\n";
    if (!a.manifest.empty()) {
        json m = result["manifest"];
        m["timestamp_utc"] = utc_timestamp();
        write_manifest(a.manifest, m);
    }
}

// --- bench ---------------------------------------------------------------

struct BenchArgs {
    std::string config, manifest;
    double gops = -1.0;
    double power_mw = -1.0;
    double freq_mhz = -1.0;
    int parallel = 1;
    bool as_json = false;
};

void run_bench(const BenchArgs& a) {
    if (!(a.power_mw > 0.0)) {
        throw UsageError("--power-mw must be positive");
    }
    const double power_w = a.power_mw / 1000.0;

    json result;
    std::string table;
    if (a.gops > 0.0) {
        // direct mode: efficiency from given throughput and power
        const double gops_per_watt = a.gops / power_w;
        table = snnkit::metrics_table(a.power_mw, a.gops, a.freq_mhz, gops_per_watt);
        result = {{"gops", a.gops},
                  {"power_mw", a.power_mw},
                  {"gops_per_watt", gops_per_watt}};
    } else {
        if (!(a.freq_mhz > 0.0)) {
            throw UsageError("need --gops, or --freq-mhz with a network config");
        }
        const snnkit::NetworkConfig cfg = config_for(a.config);
        const snnkit::CycleReport report = snnkit::cycle_model(cfg, a.parallel);
        const snnkit::Metrics m = snnkit::compute_metrics(report, a.freq_mhz * 1e6, power_w);
        table = snnkit::metrics_table(a.power_mw, m.gops, a.freq_mhz, m.gops_per_watt);
        result = snnkit::metrics_to_json(m);
        result["cycle_report"] = snnkit::cycle_report_to_json(report);
        result["parallel_groups"] = a.parallel;
        result["ops_convention"] =
            "1 op per synaptic accumulate + 1 op per neuron update, per timestep";
    }
    result["manifest"] = make_manifest(
        "bench",
        {{"gops", a.gops}, {"power_mw", a.power_mw}, {"freq_mhz", a.freq_mhz},
         {"parallel", a.parallel}, {"config", a.config}},
        json::object(), json::object(), false);

    if (a.as_json) {
        std::cout << result.dump(2) << "\n";
    } else {
        std::cout << table;
    }
    if (!a.manifest.empty()) {
        json m = result["manifest"];
        m["timestamp_utc"] = utc_timestamp();
        write_manifest(a.manifest, m);
    }
}

// --- train-toy ---------------------------------------------------------------

struct TrainToyArgs {
    std::string out, csv, manifest;
    uint64_t seed = 1;
    int epochs = 200;
    int samples = 256;
    int hidden = 32;
    int timesteps = 25;
    double learning_rate = 5e-4;
    double dropout = 0.25;
};

void run_train_toy(const TrainToyArgs& a) {
    snnkit::NetworkConfig cfg;
    cfg.input_size = 64;  // 8x8 toy images
    cfg.hidden_size = static_cast<size_t>(a.hidden);
    cfg.output_size = 2;
    cfg.timesteps = a.timesteps;
    cfg.dropout_rate = a.dropout;
    cfg.hidden.threshold = 0.5;
    cfg.output.threshold = 0.5;

    snnkit::TrainConfig tc;
    tc.learning_rate = a.learning_rate;
    tc.epochs = a.epochs;
    tc.timesteps = a.timesteps;
    tc.seed = a.seed;

    const snnkit::ToyDataset data =
        snnkit::make_toy_dataset(a.seed, static_cast<size_t>(a.samples));
    snnkit::TrainResult result =
        snnkit::train(snnkit::random_network(cfg, a.seed), data, tc);

    snnkit::QuantizeReport report;
    const snnkit::QuantizedNetwork qnet = snnkit::quantize_network(result.net, &report);
    snnkit::save_weights(a.out, qnet);
    const std::string config_out = replace_extension(a.out, ".config.json");
    snnkit::save_config(config_out, qnet.config);
    if (!a.csv.empty()) snnkit::save_curve_csv(a.csv, result.curve);

    const json manifest = make_manifest(
        "train-toy",
        {{"seed", a.seed}, {"epochs", a.epochs}, {"samples", a.samples},
         {"hidden", a.hidden}, {"timesteps", a.timesteps},
         {"learning_rate", a.learning_rate}, {"dropout", a.dropout}},
        json::object(), {{"weights", a.out}, {"config", config_out}, {"csv", a.csv}}, true);
    write_manifest(a.manifest.empty() ? default_manifest_path(a.out) : a.manifest, manifest);

    const snnkit::EpochStats& last = result.curve.back();
    std::cout << json{{"weights", a.out},
                      {"config", config_out},
                      {"csv", a.csv},
                      {"epochs", a.epochs},
                      {"final_loss", last.loss},
                      {"final_train_acc", last.train_accuracy},
                      {"final_test_acc", last.test_accuracy},
                      {"values_saturated", report.saturated}}
                     .dump(2)
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiking-network toolkit: rate coding, fixed-point hardware-model "
                 "emulation, and toy-scale training"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("snnkit ") + snnkit::kVersion);

    EncodeArgs encode_args;
    CLI::App* encode = app.add_subcommand("encode", "Rate-encode a PGM image into a spike train");
    encode->add_option("--image", encode_args.image, "input PGM (P5) image")->required();
    encode->add_option("--timesteps", encode_args.timesteps, "number of timesteps")
        ->check(CLI::PositiveNumber);
    encode->add_option("--seed", encode_args.seed, "RNG seed");
    encode->add_option("--resize", encode_args.resize, "nearest-neighbor resize, WxH");
    encode->add_option("--out", encode_args.out, "output SPKT file")->required();
    encode->add_option("--manifest", encode_args.manifest, "manifest path");

    QuantizeArgs quantize_args;
    CLI::App* quant = app.add_subcommand("quantize", "Quantize a float network JSON to Q1.15 weights");
    quant->add_option("--net", quantize_args.net, "float network JSON")->required();
    quant->add_option("--out", quantize_args.out, "output SNNW file")->required();
    quant->add_option("--config-out", quantize_args.config_out, "config JSON path");
    quant->add_option("--manifest", quantize_args.manifest, "manifest path");

    InferArgs infer_args;
    CLI::App* infer = app.add_subcommand("infer", "Run inference on a spike train");
    infer->add_option("--net", infer_args.net, "SNNW weight file")->required();
    infer->add_option("--config", infer_args.config, "network config JSON");
    infer->add_option("--spikes", infer_args.spikes, "SPKT spike train")->required();
    infer->add_option("--mode", infer_args.mode, "float or hw")->check(CLI::IsMember({"float", "hw"}));
    infer->add_flag("--trace", infer_args.trace, "emit per-timestep membrane/spike log");
    infer->add_option("--out", infer_args.out, "also write the result JSON here");
    infer->add_option("--manifest", infer_args.manifest, "manifest path");

    CompareArgs compare_args;
    CLI::App* compare = app.add_subcommand("compare", "Run float and hw modes, report divergences");
    compare->add_option("--net", compare_args.net, "float network JSON or SNNW file")->required();
    compare->add_option("--config", compare_args.config, "network config JSON");
    compare->add_option("--spikes", compare_args.spikes, "SPKT spike train")->required();
    compare->add_option("--tolerance", compare_args.tolerance, "membrane divergence tolerance");
    compare->add_option("--manifest", compare_args.manifest, "manifest path");

    BenchArgs bench_args;
    CLI::App* bench = app.add_subcommand("bench", "Throughput / energy-efficiency metrics");
    bench->add_option("--gops", bench_args.gops, "measured GOPS (direct mode)")
        ->check(CLI::PositiveNumber);
    bench->add_option("--power-mw", bench_args.power_mw, "power in milliwatts")
        ->required()
        ->check(CLI::PositiveNumber);
    bench->add_option("--freq-mhz", bench_args.freq_mhz, "clock frequency in MHz")
        ->check(CLI::PositiveNumber);
    bench->add_option("--config", bench_args.config, "network config JSON for the cycle model");
    bench->add_option("--parallel", bench_args.parallel, "parallel neuron groups in the cycle model")
        ->check(CLI::PositiveNumber);
    bench->add_flag("--json", bench_args.as_json, "JSON output instead of the table");
    bench->add_option("--manifest", bench_args.manifest, "manifest path");

    TrainToyArgs train_args;
    CLI::App* train_toy = app.add_subcommand("train-toy", "Train on the synthetic 8x8 two-class task");
    train_toy->add_option("--seed", train_args.seed, "RNG seed");
    train_toy->add_option("--epochs", train_args.epochs, "training epochs")
        ->check(CLI::PositiveNumber);
    train_toy->add_option("--samples", train_args.samples, "dataset size")
        ->check(CLI::Range(2, 1 << 20));
    train_toy->add_option("--hidden", train_args.hidden, "hidden layer size")
        ->check(CLI::PositiveNumber);
    train_toy->add_option("--timesteps", train_args.timesteps, "timesteps per inference")
        ->check(CLI::PositiveNumber);
    train_toy->add_option("--lr", train_args.learning_rate, "learning rate")
        ->check(CLI::NonNegativeNumber);
    train_toy->add_option("--dropout", train_args.dropout, "hidden dropout rate")
        ->check(CLI::Range(0.0, 0.999));
    train_toy->add_option("--out", train_args.out, "output SNNW file")->required();
    train_toy->add_option("--csv", train_args.csv, "per-epoch CSV path");
    train_toy->add_option("--manifest", train_args.manifest, "manifest path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (encode->parsed()) run_encode(encode_args);
        if (quant->parsed()) run_quantize(quantize_args);
        if (infer->parsed()) run_infer(infer_args);
        if (compare->parsed()) run_compare(compare_args);
        if (bench->parsed()) run_bench(bench_args);
        if (train_toy->parsed()) run_train_toy(train_args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const snnkit::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::overflow_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
