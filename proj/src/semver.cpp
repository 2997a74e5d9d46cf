// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/semver.hpp"

#include <charconv>
#include <vector>

namespace protoml {
namespace {

// Parses 1 to 3 dot-separated numeric parts without leading zeros.
std::optional<std::vector<std::uint64_t>> parse_parts(std::string_view text) {
    std::vector<std::uint64_t> parts;
    std::size_t start = 0;
    while (true) {
        auto dot = text.find('.', start);
        auto piece = text.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
        if (piece.empty() || (piece.size() > 1 && piece[0] == '0')) return std::nullopt;
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), v);
        if (ec != std::errc() || p != piece.data() + piece.size()) return std::nullopt;
        parts.push_back(v);
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    if (parts.empty() || parts.size() > 3) return std::nullopt;
    return parts;
}

}  // namespace

std::optional<Version> Version::parse(std::string_view text) {
    auto parts = parse_parts(text);
    if (!parts || parts->size() != 3) return std::nullopt;
    return Version{(*parts)[0], (*parts)[1], (*parts)[2]};
}

std::string Version::str() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

std::optional<VersionReq> VersionReq::parse(std::string_view text) {
    VersionReq req;
    req.text_ = std::string(text);
    if (text == "*") {
        return req;
    }
    if (!text.empty() && text[0] == '=') {
        auto v = Version::parse(text.substr(1));
        if (!v) return std::nullopt;
        req.lower_ = *v;
        req.upper_ = Version{v->major, v->minor, v->patch + 1};
        return req;
    }
    std::string_view body = (!text.empty() && text[0] == '^') ? text.substr(1) : text;
    auto parts = parse_parts(body);
    if (!parts) return std::nullopt;
    const auto& p = *parts;
    req.lower_ = Version{p[0], p.size() > 1 ? p[1] : 0, p.size() > 2 ? p[2] : 0};
    if (p[0] > 0 || p.size() == 1) {
        req.upper_ = Version{p[0] + 1, 0, 0};
    } else if (p.size() == 2 || p[1] > 0) {
        req.upper_ = Version{0, p[1] + 1, 0};
    } else {
        req.upper_ = Version{0, 0, p[2] + 1};
    }
    return req;
}

bool VersionReq::matches(const Version& v) const {
    if (text_ == "*") return true;
    return v >= lower_ && (!upper_ || v < *upper_);
}

}  // namespace protoml
