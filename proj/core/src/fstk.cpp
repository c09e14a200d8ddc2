// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#include "dc/fstk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace dc {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'T', 'K'};

void put_u16(std::ostream& os, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    }
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u8(std::ostream& os, std::uint8_t v) {
    os.write(reinterpret_cast<const char*>(&v), 1);
}

void put_payload(std::ostream& os, const std::vector<double>& data, Dtype dtype) {
    if (dtype == Dtype::f64) {
        for (double x : data) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, 8);
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) {
                b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
            }
            os.write(reinterpret_cast<const char*>(b), 8);
        }
    } else {
        for (double x : data) {
            const float f = static_cast<float>(x);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            unsigned char b[4];
            for (int i = 0; i < 4; ++i) {
                b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
            }
            os.write(reinterpret_cast<const char*>(b), 4);
        }
    }
}

struct Reader {
    std::istream& is;
    std::string path;

    void read_exact(void* dst, std::size_t n) {
        is.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is.gcount()) != n) {
            fail(errc::truncated, path + ": file ends early");
        }
    }

    std::uint8_t get_u8() {
        unsigned char b;
        read_exact(&b, 1);
        return b;
    }

    std::uint16_t get_u16() {
        unsigned char b[2];
        read_exact(b, 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }

    std::uint32_t get_u32() {
        unsigned char b[4];
        read_exact(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    void get_payload(std::vector<double>& out, std::size_t count, Dtype dtype) {
        out.resize(count);
        if (dtype == Dtype::f64) {
            for (std::size_t i = 0; i < count; ++i) {
                unsigned char b[8];
                read_exact(b, 8);
                std::uint64_t bits = 0;
                for (int k = 7; k >= 0; --k) {
                    bits = (bits << 8) | b[k];
                }
                double x;
                std::memcpy(&x, &bits, 8);
                out[i] = x;
            }
        } else {
            for (std::size_t i = 0; i < count; ++i) {
                unsigned char b[4];
                read_exact(b, 4);
                std::uint32_t bits = 0;
                for (int k = 3; k >= 0; --k) {
                    bits = (bits << 8) | b[k];
                }
                float f;
                std::memcpy(&f, &bits, 4);
                out[i] = static_cast<double>(f);
            }
        }
        for (double x : out) {
            if (!std::isfinite(x)) {
                fail(errc::non_finite, path + ": payload contains NaN/Inf");
            }
        }
    }

    void check_magic() {
        char m[4];
        read_exact(m, 4);
        if (std::memcmp(m, kMagic, 4) != 0) {
            fail(errc::bad_magic, path + ": not an FSTK container");
        }
    }
};

Dtype dtype_from_byte(std::uint8_t b, const std::string& path) {
    if (b > 1) {
        fail(errc::bad_version, path + ": unknown dtype byte " + std::to_string(b));
    }
    return static_cast<Dtype>(b);
}

FeatureStack read_stack_body(Reader& r) {
    const std::uint32_t version = r.get_u32();
    if (version != 1) {
        fail(errc::bad_version, r.path + ": stack container version " + std::to_string(version) +
                                    " unsupported (expected 1)");
    }
    const std::uint32_t entry_count = r.get_u32();
    const std::uint32_t n = r.get_u32();
    const std::uint32_t dv = r.get_u32();
    const std::uint16_t hp = r.get_u16();
    const std::uint16_t wp = r.get_u16();
    const Dtype dtype = dtype_from_byte(r.get_u8(), r.path);
    r.get_u8();  // reserved
    if (entry_count == 0 || n == 0 || dv == 0) {
        fail(errc::bad_version, r.path + ": empty stack header");
    }
    if (static_cast<std::size_t>(hp) * wp != n) {
        fail(errc::grid_mismatch, r.path + ": grid " + std::to_string(hp) + "x" + std::to_string(wp) +
                                      " does not cover " + std::to_string(n) + " tokens");
    }
    FeatureStack s;
    s.grid = {hp, wp};
    s.entries.reserve(entry_count);
    for (std::uint32_t e = 0; e < entry_count; ++e) {
        Tensor t({n, dv});
        r.get_payload(t.data, static_cast<std::size_t>(n) * dv, dtype);
        s.entries.push_back(std::move(t));
    }
    return s;
}

}  // namespace

void save_stack(const FeatureStack& s, const std::string& path, Dtype dtype) {
    s.validate();
    const std::size_t n = s.tokens(), dv = s.dim();
    if (n > 0xffffffffULL || dv > 0xffffffffULL || s.grid.h > 0xffff || s.grid.w > 0xffff) {
        fail(errc::bad_argument, "stack too large for the FSTK header");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        fail(errc::bad_argument, path + ": cannot open for writing");
    }
    os.write(kMagic, 4);
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(s.entries.size()));
    put_u32(os, static_cast<std::uint32_t>(n));
    put_u32(os, static_cast<std::uint32_t>(dv));
    put_u16(os, static_cast<std::uint16_t>(s.grid.h));
    put_u16(os, static_cast<std::uint16_t>(s.grid.w));
    put_u8(os, static_cast<std::uint8_t>(dtype));
    put_u8(os, 0);
    for (const auto& e : s.entries) {
        put_payload(os, e.data, dtype);
    }
    if (!os) {
        fail(errc::bad_argument, path + ": write failed");
    }
}

FeatureStack load_stack(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        fail(errc::bad_argument, path + ": cannot open for reading");
    }
    Reader r{is, path};
    r.check_magic();
    FeatureStack s = read_stack_body(r);
    s.validate();
    return s;
}

void save_tensors(const NamedTensors& tensors, const std::string& path, Dtype dtype) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        fail(errc::bad_argument, path + ": cannot open for writing");
    }
    os.write(kMagic, 4);
    put_u32(os, 2);
    put_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        if (name.size() > 0xffff) {
            fail(errc::bad_argument, "tensor name too long: " + name);
        }
        put_u16(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u8(os, static_cast<std::uint8_t>(dtype));
        put_u8(os, static_cast<std::uint8_t>(t.rank()));
        for (std::size_t d : t.shape) {
            put_u32(os, static_cast<std::uint32_t>(d));
        }
        put_payload(os, t.data, dtype);
    }
    if (!os) {
        fail(errc::bad_argument, path + ": write failed");
    }
}

NamedTensors load_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        fail(errc::bad_argument, path + ": cannot open for reading");
    }
    Reader r{is, path};
    r.check_magic();
    const std::uint32_t version = r.get_u32();
    if (version != 2) {
        fail(errc::bad_version, path + ": tensor container version " + std::to_string(version) +
                                    " unsupported (expected 2)");
    }
    const std::uint32_t count = r.get_u32();
    NamedTensors out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = r.get_u16();
        std::string name(name_len, '\0');
        r.read_exact(name.data(), name_len);
        const Dtype dtype = dtype_from_byte(r.get_u8(), path);
        const std::uint8_t rank = r.get_u8();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) {
            d = r.get_u32();
            if (d == 0) {
                fail(errc::bad_version, path + ": zero extent in tensor '" + name + "'");
            }
        }
        Tensor t(shape);
        r.get_payload(t.data, t.numel(), dtype);
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

std::vector<FeatureStack> load_stack_sequence(const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<FeatureStack> frames;
    if (fs::is_directory(path)) {
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(path)) {
            if (e.is_regular_file() && e.path().extension() == ".fstk") {
                files.push_back(e.path().string());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            fail(errc::bad_argument, path + ": directory holds no .fstk files");
        }
        for (const auto& f : files) {
            frames.push_back(load_stack(f));
        }
        return frames;
    }
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        fail(errc::bad_argument, path + ": cannot open for reading");
    }
    Reader r{is, path};
    while (true) {
        is.peek();
        if (is.eof()) {
            break;
        }
        r.check_magic();
        FeatureStack s = read_stack_body(r);
        s.validate();
        frames.push_back(std::move(s));
    }
    if (frames.empty()) {
        fail(errc::truncated, path + ": no stacks in container");
    }
    return frames;
}

void save_stack_sequence(const std::vector<FeatureStack>& frames, const std::string& path,
                         Dtype dtype) {
    if (frames.empty()) {
        fail(errc::bad_argument, "stack sequence is empty");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        fail(errc::bad_argument, path + ": cannot open for writing");
    }
    for (const FeatureStack& s : frames) {
        s.validate();
        os.write(kMagic, 4);
        put_u32(os, 1);
        put_u32(os, static_cast<std::uint32_t>(s.entries.size()));
        put_u32(os, static_cast<std::uint32_t>(s.tokens()));
        put_u32(os, static_cast<std::uint32_t>(s.dim()));
        put_u16(os, static_cast<std::uint16_t>(s.grid.h));
        put_u16(os, static_cast<std::uint16_t>(s.grid.w));
        put_u8(os, static_cast<std::uint8_t>(dtype));
        put_u8(os, 0);
        for (const auto& e : s.entries) {
            put_payload(os, e.data, dtype);
        }
    }
    if (!os) {
        fail(errc::bad_argument, path + ": write failed");
    }
}

}  // namespace dc
