// Copyright (c) 2026 denseconnector contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace dctool {

// Minimal JSON emitter for the CLI summaries: keys keep insertion order and
// every floating value prints with exactly nine significant digits, so two
// runs of the same command diff clean.
class Json {
  public:
    static Json object() { return Json(Kind::object); }
    static Json array() { return Json(Kind::array); }
    static Json str(std::string v) {
        Json j(Kind::string);
        j.str_ = std::move(v);
        return j;
    }
    static Json num(double v) {
        Json j(Kind::number);
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        j.str_ = buf;
        return j;
    }
    static Json num(std::size_t v) {
        Json j(Kind::number);
        j.str_ = std::to_string(v);
        return j;
    }
    static Json boolean(bool v) {
        Json j(Kind::boolean);
        j.str_ = v ? "true" : "false";
        return j;
    }

    Json& set(const std::string& key, Json value) {
        members_.emplace_back(key, std::move(value));
        return *this;
    }
    Json& push(Json value) {
        items_.push_back(std::move(value));
        return *this;
    }

    std::string dump() const {
        std::string out;
        write(out);
        return out;
    }

  private:
    enum class Kind { object, array, string, number, boolean };

    explicit Json(Kind k) : kind_(k) {}

    static void escape(const std::string& s, std::string& out) {
        out.push_back('"');
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out += buf;
                    } else {
                        out.push_back(c);
                    }
            }
        }
        out.push_back('"');
    }

    void write(std::string& out) const {
        switch (kind_) {
            case Kind::object: {
                out.push_back('{');
                for (std::size_t i = 0; i < members_.size(); ++i) {
                    if (i) out.push_back(',');
                    escape(members_[i].first, out);
                    out.push_back(':');
                    members_[i].second.write(out);
                }
                out.push_back('}');
                break;
            }
            case Kind::array: {
                out.push_back('[');
                for (std::size_t i = 0; i < items_.size(); ++i) {
                    if (i) out.push_back(',');
                    items_[i].write(out);
                }
                out.push_back(']');
                break;
            }
            case Kind::string: escape(str_, out); break;
            case Kind::number:
            case Kind::boolean: out += str_; break;
        }
    }

    Kind kind_;
    std::string str_;
    std::vector<std::pair<std::string, Json>> members_;
    std::vector<Json> items_;
};

}  // namespace dctool
