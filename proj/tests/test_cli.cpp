// Integration checks that drive the installed CLI surfaces directly:
// file formats on disk, exit codes, and the behaviors promised per command.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snnkit/io.hpp"
#include "subprocess.hpp"

using namespace snnkit;
using nlohmann::json;
using testutil::run_cli;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void check(const std::string& name, const std::function<void()>& body) {
    try {
        body();
        std::printf("[PASS] %s\n", name.c_str());
    } catch (const std::exception& e) {
        std::printf("[FAIL] %s: %s\n", name.c_str(), e.what());
        ++g_failures;
    }
    std::fflush(stdout);
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("snnkit_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_flat_pgm(const std::string& path, int side, uint8_t value) {
    GrayImage img{side, side, std::vector<uint8_t>(static_cast<size_t>(side) * side, value)};
    save_pgm(path, img);
}

// dyadic 2-2-2 network: exactly representable in Q1.15
void write_dyadic_net(const std::string& path) {
    const json net{
        {"config",
         {{"input_size", 2},
          {"hidden_size", 2},
          {"output_size", 2},
          {"timesteps", 4},
          {"hidden", {{"beta", 0.5}, {"threshold", 0.5}}},
          {"output", {{"beta", 0.5}, {"threshold", 0.5}}}}},
        {"layers",
         {{{"weights", {{0.3125, 0.1875}, {0.125, 0.375}}}, {"bias", {0.0625, -0.0625}}},
          {{"weights", {{0.4375, -0.1875}, {0.1875, 0.3125}}}, {"bias", {0.0, 0.0625}}}}}};
    std::ofstream(path) << net.dump();
}

}  // namespace

int main() {
    std::printf("snnkit CLI integration checks\n");
    TempDir dir;

    check("encode: all-black PGM becomes an all-zero spike train", [&] {
        write_flat_pgm(dir.file("black.pgm"), 8, 0);
        const auto r = run_cli("encode --image \"" + dir.file("black.pgm") +
                               "\" --timesteps 12 --seed 4 --out \"" + dir.file("black.spkt") +
                               "\"");
        require(r.exit_code == 0, "encode failed");
        const SpikeTrain tr = load_spike_train(dir.file("black.spkt"));
        require(tr.timesteps == 12 && tr.neurons == 64, "unexpected dimensions");
        for (uint8_t b : tr.bits) require(b == 0, "black image produced a spike");
    });

    check("encode: all-white PGM becomes an all-one spike train", [&] {
        write_flat_pgm(dir.file("white.pgm"), 8, 255);
        const auto r = run_cli("encode --image \"" + dir.file("white.pgm") +
                               "\" --timesteps 12 --seed 4 --out \"" + dir.file("white.spkt") +
                               "\"");
        require(r.exit_code == 0, "encode failed");
        const SpikeTrain tr = load_spike_train(dir.file("white.spkt"));
        for (uint8_t b : tr.bits) require(b == 1, "white image missed a spike");
    });

    check("encode: --resize produces the requested grid", [&] {
        write_flat_pgm(dir.file("big.pgm"), 32, 200);
        const auto r = run_cli("encode --image \"" + dir.file("big.pgm") +
                               "\" --resize 8x8 --timesteps 5 --seed 1 --out \"" +
                               dir.file("resized.spkt") + "\"");
        require(r.exit_code == 0, "encode failed");
        require(load_spike_train(dir.file("resized.spkt")).neurons == 64, "resize ignored");
    });

    check("encode writes a manifest next to the output", [&] {
        require(fs::exists(dir.file("black.spkt.manifest.json")), "manifest missing");
        std::ifstream in(dir.file("black.spkt.manifest.json"));
        const json m = json::parse(in);
        require(m["command"] == "encode", "wrong command in manifest");
        require(m["params"]["seed"] == 4, "seed not recorded");
        require(m.contains("timestamp_utc"), "timestamp missing");
    });

    check("quantize reports saturation counts", [&] {
        write_dyadic_net(dir.file("net.json"));
        const auto r = run_cli("quantize --net \"" + dir.file("net.json") + "\" --out \"" +
                               dir.file("net.snnw") + "\"");
        require(r.exit_code == 0, "quantize failed");
        const json out = json::parse(r.out);
        require(out["values_saturated"] == 0, "dyadic net must not saturate");
        require(fs::exists(dir.file("net.config.json")), "config sidecar missing");
    });

    check("infer: hw mode matches float mode on exactly representable weights", [&] {
        GrayImage img{2, 1, {255, 0}};
        save_pgm(dir.file("in2.pgm"), img);
        auto enc = run_cli("encode --image \"" + dir.file("in2.pgm") +
                           "\" --timesteps 4 --seed 2 --out \"" + dir.file("in2.spkt") + "\"");
        require(enc.exit_code == 0, "encode failed");
        const std::string base = " --net \"" + dir.file("net.snnw") + "\" --config \"" +
                                 dir.file("net.config.json") + "\" --spikes \"" +
                                 dir.file("in2.spkt") + "\"";
        const auto hw = run_cli("infer" + base + " --mode hw");
        const auto fl = run_cli("infer" + base + " --mode float");
        require(hw.exit_code == 0 && fl.exit_code == 0, "infer failed");
        const json jh = json::parse(hw.out);
        const json jf = json::parse(fl.out);
        require(jh["prediction"] == jf["prediction"], "modes disagree");
        require(jh["spike_counts"] == jf["spike_counts"], "spike counts disagree");
        require(jh["cycle_report"]["phases"]["load"] == 4, "cycle phases off");
    });

    check("infer: --trace emits a per-timestep membrane/spike log", [&] {
        const auto r = run_cli("infer --net \"" + dir.file("net.snnw") + "\" --config \"" +
                               dir.file("net.config.json") + "\" --spikes \"" +
                               dir.file("in2.spkt") + "\" --mode hw --trace");
        require(r.exit_code == 0, "infer failed");
        const json j = json::parse(r.out);
        require(j.contains("trace") && j["trace"].size() == 4, "trace missing or wrong length");
        require(j["trace"][0].contains("hidden_u"), "trace lacks membranes");
        require(j["trace"][0].contains("output_spikes"), "trace lacks spikes");
    });

    check("infer: missing file exits nonzero and names the path", [&] {
        const auto r = run_cli("infer --net \"" + dir.file("nothere.snnw") +
                               "\" --spikes \"" + dir.file("in2.spkt") + "\" 2>&1");
        require(r.exit_code == 2, "want data error exit 2, got " +
                                      std::to_string(r.exit_code));
        require(r.out.find("nothere.snnw") != std::string::npos, "path not in message");
    });

    check("infer: dimension mismatch names both shapes", [&] {
        const auto r = run_cli("infer --net \"" + dir.file("net.snnw") + "\" --config \"" +
                               dir.file("net.config.json") + "\" --spikes \"" +
                               dir.file("black.spkt") + "\" --mode hw 2>&1");
        require(r.exit_code == 2, "want exit 2");
        require(r.out.find("64") != std::string::npos && r.out.find("2") != std::string::npos,
                "shapes not named: " + r.out);
    });

    check("compare: representable net has zero divergences", [&] {
        const auto r = run_cli("compare --net \"" + dir.file("net.json") + "\" --config \"" +
                               dir.file("net.config.json") + "\" --spikes \"" +
                               dir.file("in2.spkt") + "\"");
        require(r.exit_code == 0, "compare failed");
        const json j = json::parse(r.out);
        require(j["membrane_divergences"] == 0, "dyadic net diverged");
        require(j["predictions_match"] == true, "predictions differ");
        require(j["first_divergence"].is_null(), "spurious first divergence");
    });

    check("compare: saturating weight is reported", [&] {
        json net;
        {
            std::ifstream in(dir.file("net.json"));
            in >> net;
        }
        net["layers"][0]["weights"][0][0] = 1.3;
        std::ofstream(dir.file("sat.json")) << net.dump();
        const auto r = run_cli("compare --net \"" + dir.file("sat.json") + "\" --config \"" +
                               dir.file("net.config.json") + "\" --spikes \"" +
                               dir.file("in2.spkt") + "\"");
        require(r.exit_code == 0, "compare failed");
        const json j = json::parse(r.out);
        require(j["quantize_saturations"].get<int>() >= 1, "saturation not reported");
    });

    check("compare: tolerance 0 reports rounding-level differences", [&] {
        // beta 0.9 is not exactly representable, so beta*u rounds in Q1.15
        json net;
        {
            std::ifstream in(dir.file("net.json"));
            in >> net;
        }
        net["config"]["hidden"]["beta"] = 0.9;
        net["config"]["output"]["beta"] = 0.9;
        std::ofstream(dir.file("rough.json")) << net.dump();
        // config sidecar with the same betas
        NetworkConfig cfg;
        cfg.input_size = 2;
        cfg.hidden_size = 2;
        cfg.output_size = 2;
        cfg.timesteps = 4;
        cfg.hidden.beta = 0.9;
        cfg.hidden.threshold = 0.5;
        cfg.output.beta = 0.9;
        cfg.output.threshold = 0.5;
        save_config(dir.file("rough.config.json"), cfg);
        const auto strict = run_cli("compare --net \"" + dir.file("rough.json") +
                                    "\" --config \"" + dir.file("rough.config.json") +
                                    "\" --spikes \"" + dir.file("in2.spkt") +
                                    "\" --tolerance 0");
        require(strict.exit_code == 0, "compare failed");
        const json j = json::parse(strict.out);
        require(j["membrane_divergences"].get<int>() >= 1,
                "tolerance 0 found no rounding differences");
    });

    check("bench: unit power makes GOPS/W equal GOPS", [&] {
        const auto r = run_cli("bench --gops 77 --power-mw 1000 --json");
        require(r.exit_code == 0, "bench failed");
        const json j = json::parse(r.out);
        require(j["gops_per_watt"] == j["gops"], "unit power mismatch");
    });

    check("bench: cycle-model path emits the table and JSON report", [&] {
        save_config(dir.file("full.json"), NetworkConfig{});
        const auto r = run_cli("bench --config \"" + dir.file("full.json") +
                               "\" --freq-mhz 67 --power-mw 495 --json");
        require(r.exit_code == 0, "bench failed");
        const json j = json::parse(r.out);
        require(j["cycle_report"]["cycles_per_inference"].get<uint64_t>() > 0, "no cycles");
        require(j.contains("ops_convention"), "ops convention not documented");
        const auto table = run_cli("bench --config \"" + dir.file("full.json") +
                                   "\" --freq-mhz 67 --power-mw 495");
        require(table.out.find("Energy Efficiency (GOPS/W)") != std::string::npos,
                "table missing the efficiency row");
    });

    check("train-toy: writes weights, config, CSV, and manifest", [&] {
        const auto r = run_cli("train-toy --seed 11 --epochs 2 --samples 24 --hidden 8 "
                               "--timesteps 6 --out \"" +
                               dir.file("toy.snnw") + "\" --csv \"" + dir.file("toy.csv") +
                               "\"");
        require(r.exit_code == 0, "train-toy failed");
        require(fs::exists(dir.file("toy.snnw")), "weights missing");
        require(fs::exists(dir.file("toy.config.json")), "config missing");
        require(fs::exists(dir.file("toy.snnw.manifest.json")), "manifest missing");
        std::ifstream csv(dir.file("toy.csv"));
        std::string header;
        std::getline(csv, header);
        require(header == "epoch,loss,train_acc,test_acc", "CSV header mismatch");
        int rows = 0;
        std::string line;
        while (std::getline(csv, line) && !line.empty()) ++rows;
        require(rows == 2, "CSV row count mismatch");
    });

    check("usage errors exit with code 1", [&] {
        require(run_cli("bench --gops 5 2>/dev/null").exit_code == 1, "missing required flag");
        require(run_cli("infer --net x --spikes y --mode bogus 2>/dev/null").exit_code == 1,
                "bad enum value");
        require(run_cli("frobnicate 2>/dev/null").exit_code == 1, "unknown subcommand");
    });

    if (g_failures == 0) {
        std::printf("all CLI checks passed\n");
        return 0;
    }
    std::printf("%d CLI checks failed\n", g_failures);
    return 1;
}
