// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "dc/fstk.hpp"
#include "dc/rng.hpp"
#include "test_util.hpp"

using namespace dc;
using dctest::bitwise_equal;
using dctest::temp_path;

namespace {

void corrupt_byte(const std::string& path, std::size_t offset, char value) {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(static_cast<std::streamoff>(offset));
    f.write(&value, 1);
}

}  // namespace

TEST_SUITE_BEGIN("fstk");

TEST_CASE("stack round-trip at f64 is lossless") {
    FeatureStack s = synth_stack(5, 3, 12, 4, {3, 4});
    const std::string path = temp_path("roundtrip64.fstk");
    save_stack(s, path, Dtype::f64);
    FeatureStack back = load_stack(path);
    REQUIRE(back.entries.size() == s.entries.size());
    CHECK(back.grid == s.grid);
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
        CHECK(bitwise_equal(back.entries[i], s.entries[i]));
    }
}

TEST_CASE("stack stored at f32 stays within 1e-6 relative") {
    FeatureStack s = synth_stack(6, 2, 16, 8, {4, 4});
    const std::string path = temp_path("roundtrip32.fstk");
    save_stack(s, path, Dtype::f32);
    FeatureStack back = load_stack(path);
    for (std::size_t e = 0; e < s.entries.size(); ++e) {
        for (std::size_t i = 0; i < s.entries[e].numel(); ++i) {
            const double a = s.entries[e].data[i];
            const double b = back.entries[e].data[i];
            CHECK(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("corrupted magic is a distinct error") {
    FeatureStack s = synth_stack(7, 2, 4, 2, {2, 2});
    const std::string path = temp_path("badmagic.fstk");
    save_stack(s, path);
    corrupt_byte(path, 0, 'X');
    try {
        load_stack(path);
        FAIL("expected bad magic");
    } catch (const error& e) {
        CHECK(e.code() == errc::bad_magic);
    }
}

TEST_CASE("unknown version is a distinct error") {
    FeatureStack s = synth_stack(7, 2, 4, 2, {2, 2});
    const std::string path = temp_path("badversion.fstk");
    save_stack(s, path);
    corrupt_byte(path, 4, 9);  // version field
    try {
        load_stack(path);
        FAIL("expected bad version");
    } catch (const error& e) {
        CHECK(e.code() == errc::bad_version);
    }
}

TEST_CASE("truncation is a distinct error") {
    FeatureStack s = synth_stack(7, 2, 4, 2, {2, 2});
    const std::string path = temp_path("trunc.fstk");
    save_stack(s, path);
    // drop the tail
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    try {
        load_stack(path);
        FAIL("expected truncation");
    } catch (const error& e) {
        CHECK(e.code() == errc::truncated);
    }
}

TEST_CASE("NaN payload is a distinct error") {
    FeatureStack s = synth_stack(7, 1, 4, 2, {2, 2});
    const std::string path = temp_path("nan.fstk");
    save_stack(s, path, Dtype::f64);
    // header is 26 bytes; first payload double starts right after
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(26);
    const std::uint64_t nan_bits = 0x7ff8000000000000ULL;
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>((nan_bits >> (8 * i)) & 0xff);
    }
    f.write(reinterpret_cast<const char*>(b), 8);
    f.close();
    try {
        load_stack(path);
        FAIL("expected non-finite payload error");
    } catch (const error& e) {
        CHECK(e.code() == errc::non_finite);
    }
}

TEST_CASE("grid inconsistent with token count is rejected") {
    FeatureStack s = synth_stack(7, 1, 4, 2, {2, 2});
    const std::string path = temp_path("badgrid.fstk");
    save_stack(s, path);
    corrupt_byte(path, 20, 3);  // Hp low byte: 3*2 != 4
    try {
        load_stack(path);
        FAIL("expected grid mismatch");
    } catch (const error& e) {
        CHECK(e.code() == errc::grid_mismatch);
    }
}

TEST_CASE("named tensor container round-trips with shapes and order") {
    Rng rng(17);
    NamedTensors ts;
    ts.emplace_back("W1", Tensor::uniform({3, 4}, rng, -1.0, 1.0));
    ts.emplace_back("b1", Tensor::uniform({4}, rng, -1.0, 1.0));
    ts.emplace_back("kernel", Tensor::uniform({2, 2, 3, 3}, rng, -1.0, 1.0));
    const std::string path = temp_path("named.fstk");
    save_tensors(ts, path);
    NamedTensors back = load_tensors(path);
    REQUIRE(back.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        CHECK(back[i].first == ts[i].first);
        CHECK(bitwise_equal(back[i].second, ts[i].second));
    }
}

TEST_CASE("stack loader refuses the named-tensor container") {
    NamedTensors ts;
    ts.emplace_back("t", Tensor::full({2}, 1.0));
    const std::string path = temp_path("wrongkind.fstk");
    save_tensors(ts, path);
    try {
        load_stack(path);
        FAIL("expected bad version");
    } catch (const error& e) {
        CHECK(e.code() == errc::bad_version);
    }
}

TEST_CASE("a directory of stacks loads in filename order") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "dc_tests" / "frames_dir";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<FeatureStack> frames;
    for (std::uint64_t i = 0; i < 3; ++i) {
        frames.push_back(synth_stack(300 + i, 2, 4, 2, {2, 2}));
        char name[32];
        std::snprintf(name, sizeof(name), "f%02llu.fstk", (unsigned long long)i);
        save_stack(frames.back(), (dir / name).string());
    }
    std::vector<FeatureStack> back = load_stack_sequence(dir.string());
    REQUIRE(back.size() == 3);
    for (std::size_t f = 0; f < 3; ++f) {
        CHECK(bitwise_equal(back[f].entries[0], frames[f].entries[0]));
    }
}

TEST_CASE("concatenated stacks round-trip in order") {
    std::vector<FeatureStack> frames;
    for (std::uint64_t i = 0; i < 3; ++i) {
        frames.push_back(synth_stack(100 + i, 2, 4, 2, {2, 2}));
    }
    const std::string path = temp_path("frames.fstk");
    save_stack_sequence(frames, path);
    std::vector<FeatureStack> back = load_stack_sequence(path);
    REQUIRE(back.size() == 3);
    for (std::size_t f = 0; f < 3; ++f) {
        for (std::size_t e = 0; e < frames[f].entries.size(); ++e) {
            CHECK(bitwise_equal(back[f].entries[e], frames[f].entries[e]));
        }
    }
}

TEST_SUITE_END();
