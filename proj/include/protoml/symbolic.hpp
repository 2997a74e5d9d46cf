// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0
//
// Canonical symbolic integers used for tensor dimensions.
//
// A SymInt is a polynomial with int64 coefficients over atoms, where an atom
// is either a named symbol or a floor division `num // den` that could not be
// simplified. Construction always normalizes, so two SymInts are provably
// equal exactly when their canonical forms compare equal.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace protoml {

class SymInt;

struct SymAtom {
    // symbol when num is null, otherwise floor(num / den)
    std::string symbol;
    std::shared_ptr<const SymInt> num;
    std::shared_ptr<const SymInt> den;
    std::string key;  // canonical rendering; total order and equality

    bool operator<(const SymAtom& o) const { return key < o.key; }
    bool operator==(const SymAtom& o) const { return key == o.key; }
};

class SymInt {
public:
    SymInt() = default;
    SymInt(std::int64_t value);  // NOLINT(google-explicit-constructor)

    static SymInt symbol(const std::string& name);

    bool is_constant() const;
    std::optional<std::int64_t> constant() const;

    SymInt operator-() const;
    friend SymInt operator+(const SymInt& a, const SymInt& b);
    friend SymInt operator-(const SymInt& a, const SymInt& b);
    friend SymInt operator*(const SymInt& a, const SymInt& b);

    /// Floor division. Throws protoml::Error(Schema) on division by zero.
    static SymInt floordiv(const SymInt& a, const SymInt& b);
    static SymInt mod(const SymInt& a, const SymInt& b);

    bool operator==(const SymInt& o) const { return terms_ == o.terms_; }
    bool operator!=(const SymInt& o) const { return !(*this == o); }

    /// Python-evaluable rendering, e.g. `(H - 1)//2 + 1`.
    std::string str() const;

private:
    using Monomial = std::vector<SymAtom>;  // sorted multiset; empty = constant term
    struct MonoLess {
        bool operator()(const Monomial& a, const Monomial& b) const;
    };
    std::map<Monomial, std::int64_t, MonoLess> terms_;

    static SymInt floor_atom(const SymInt& num, const SymInt& den);
    void add_term(const Monomial& m, std::int64_t coeff);
};

}  // namespace protoml
