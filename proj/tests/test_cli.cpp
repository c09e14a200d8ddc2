// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0
//
// Drives the installed CLI binary end to end. The harness passes the binary
// path via the DCTOOL environment variable.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "dc/fstk.hpp"
#include "test_util.hpp"

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunResult run_tool(const std::string& args) {
    const char* tool = std::getenv("DCTOOL");
    REQUIRE_MESSAGE(tool != nullptr, "DCTOOL env var must point at the binary");
    const std::string cmd = std::string(tool) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) {
        r.output.append(buf, n);
    }
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string write_config(const std::string& name, const std::string& body) {
    const std::string path = dctest::temp_path(name);
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("stats on the efficient config reports 144 tokens") {
    const std::string cfg = write_config(
        "dci_f2.json",
        R"({"variant":"DCI","layers":[],"alpha":1,"groups":2,"target_dim":4096,"efficient_factor":2})");
    RunResult r = run_tool("stats --config " + cfg + " --geometry clip-l-336");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"tokens\":144") != std::string::npos);
    CHECK(r.output.find("\"token_reduction\":4") != std::string::npos);
}

TEST_CASE("forward writes an embedding container and a shape summary") {
    const std::string cfg =
        write_config("dci.json", R"({"variant":"DCI","groups":2,"target_dim":12})");
    const std::string out = dctest::temp_path("emb.fstk");
    RunResult r = run_tool("forward --config " + cfg + " --geometry desk --seed 5 --out " + out);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"tokens\":16") != std::string::npos);
    CHECK(r.output.find("\"dim\":12") != std::string::npos);
    dc::NamedTensors tensors = dc::load_tensors(out);
    REQUIRE(tensors.size() == 1);
    CHECK(tensors[0].first == "tokens");
    CHECK(tensors[0].second.shape == std::vector<std::size_t>{16, 12});
}

TEST_CASE("forward round-trips a stack file") {
    dc::FeatureStack s = dc::synth_stack(9, 6, 16, 8, {4, 4});
    const std::string stack_path = dctest::temp_path("stack.fstk");
    dc::save_stack(s, stack_path);
    const std::string cfg =
        write_config("sti.json", R"({"variant":"STI","layers":[2,4,6],"alpha":4,"target_dim":8})");
    RunResult r = run_tool("forward --config " + cfg + " --stack " + stack_path);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"tokens\":24") != std::string::npos);  // 16 + 2*4
}

TEST_CASE("unknown variant exits 2 and names the field") {
    const std::string cfg = write_config("bad.json", R"({"variant":"FOO","target_dim":8})");
    RunResult r = run_tool("forward --config " + cfg + " --geometry desk");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("variant") != std::string::npos);
}

TEST_CASE("missing required flags exit 2") {
    RunResult r = run_tool("forward");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("gradcheck passes on the desk geometry") {
    const std::string cfg = write_config(
        "sci2.json", R"({"variant":"SCI_CONV2D","layers":[2,4,6],"target_dim":12})");
    RunResult r = run_tool("gradcheck --config " + cfg + " --seed 42");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"pass\":true") != std::string::npos);
    CHECK(r.output.find("conv2d.W") != std::string::npos);
}

TEST_CASE("video samples frames and accounts tokens") {
    const std::string cfg =
        write_config("dci_v.json", R"({"variant":"DCI","groups":2,"target_dim":12})");
    RunResult r = run_tool("video --config " + cfg +
                           " --geometry desk --seed 3 --total-frames 16 --frames 4");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"indices\":[2,6,10,14]") != std::string::npos);
    CHECK(r.output.find("\"total_tokens\":64") != std::string::npos);
}

TEST_CASE("video embeds a saved frame container") {
    std::vector<dc::FeatureStack> frames;
    for (std::uint64_t i = 0; i < 6; ++i) {
        frames.push_back(dc::synth_stack(700 + i, 4, 16, 6, {4, 4}));
    }
    const std::string clip = dctest::temp_path("clip.fstk");
    dc::save_stack_sequence(frames, clip);
    const std::string cfg =
        write_config("dci_clip.json", R"({"variant":"DCI","groups":2,"target_dim":10})");
    const std::string out = dctest::temp_path("clip_emb.fstk");
    RunResult r =
        run_tool("video --config " + cfg + " --stack " + clip + " --frames 3 --out " + out);
    CHECK(r.exit_code == 0);
    dc::NamedTensors tensors = dc::load_tensors(out);
    REQUIRE(tensors.size() == 3);
    CHECK(tensors[0].first == "frame_0000");
    CHECK(tensors[0].second.shape == std::vector<std::size_t>{16, 10});
}

TEST_CASE("forward reloads saved parameters bit for bit") {
    const std::string cfg =
        write_config("dci_p.json", R"({"variant":"DCI","groups":2,"target_dim":12})");
    const std::string params = dctest::temp_path("params.fstk");
    const std::string out_a = dctest::temp_path("emb_a.fstk");
    const std::string out_b = dctest::temp_path("emb_b.fstk");
    RunResult a = run_tool("forward --config " + cfg + " --geometry desk --seed 6 --out " + out_a +
                           " --save-params " + params);
    CHECK(a.exit_code == 0);
    RunResult b = run_tool("forward --config " + cfg + " --geometry desk --seed 6 --params " +
                           params + " --out " + out_b);
    CHECK(b.exit_code == 0);
    dc::NamedTensors ta = dc::load_tensors(out_a);
    dc::NamedTensors tb = dc::load_tensors(out_b);
    CHECK(ta[0].second.data == tb[0].second.data);
}

TEST_CASE("train-toy emits a deterministic loss curve") {
    const std::string cfg =
        write_config("train.json", R"({"variant":"DCI","groups":2,"target_dim":12})");
    RunResult a = run_tool("train-toy --config " + cfg + " --steps 5 --batch 4 --seed 11");
    RunResult b = run_tool("train-toy --config " + cfg + " --steps 5 --batch 4 --seed 11");
    CHECK(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(a.output.find("\"final_loss\":") != std::string::npos);
}

TEST_CASE("dump-attn writes a head-averaged attention matrix") {
    const std::string out = dctest::temp_path("attn.fstk");
    RunResult r = run_tool("dump-attn --layer 2 --seed 4 --out " + out);
    CHECK(r.exit_code == 0);
    dc::NamedTensors tensors = dc::load_tensors(out);
    REQUIRE(tensors.size() == 1);
    CHECK(tensors[0].first == "attention");
    CHECK(tensors[0].second.shape == std::vector<std::size_t>{16, 16});
    // rows of a head-averaged softmax still sum to one
    for (std::size_t i = 0; i < 16; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 16; ++j) {
            s += tensors[0].second.at(i, j);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    RunResult bad = run_tool("dump-attn --layer 9");
    CHECK(bad.exit_code == 2);
}

TEST_SUITE_END();
