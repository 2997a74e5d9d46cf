// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace protoml {

struct Version {
    std::uint64_t major = 0;
    std::uint64_t minor = 0;
    std::uint64_t patch = 0;

    static std::optional<Version> parse(std::string_view text);
    std::string str() const;

    auto operator<=>(const Version&) const = default;
};

/// Version requirement. Supported forms:
///   `^1.2.3`, `^1.2`, `^1`  caret: compatible within the leftmost nonzero part
///   `1.2.3`                 bare version, same as caret
///   `=1.2.3`                exact
///   `*`                     any
class VersionReq {
public:
    static std::optional<VersionReq> parse(std::string_view text);

    bool matches(const Version& v) const;
    const std::string& str() const { return text_; }

    bool operator==(const VersionReq& o) const { return text_ == o.text_; }

private:
    std::string text_;
    Version lower_;
    std::optional<Version> upper_;  // exclusive
};

}  // namespace protoml
