// Copyright (c) 2026, The ProtoML Authors
// SPDX-License-Identifier: Apache-2.0

#include "protoml/symbolic.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "protoml/error.hpp"

namespace protoml {
namespace {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) {
        throw Error(ErrorCode::Schema, "integer overflow in shape arithmetic");
    }
    return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) {
        throw Error(ErrorCode::Schema, "integer overflow in shape arithmetic");
    }
    return r;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

bool is_simple(const SymInt& v) {
    if (auto c = v.constant()) {
        return *c >= 0;
    }
    std::string s = v.str();
    return std::all_of(s.begin(), s.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.';
    });
}

std::string wrap(const SymInt& v) { return is_simple(v) ? v.str() : "(" + v.str() + ")"; }

std::string atom_text(const SymAtom& a) {
    if (!a.num) {
        return a.symbol;
    }
    return wrap(*a.num) + "//" + wrap(*a.den);
}

}  // namespace

bool SymInt::MonoLess::operator()(const Monomial& a, const Monomial& b) const {
    // constant term sorts last so renderings read `2*N + 1`
    if (a.empty() != b.empty()) {
        return b.empty();
    }
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

SymInt::SymInt(std::int64_t value) {
    if (value != 0) {
        terms_[{}] = value;
    }
}

SymInt SymInt::symbol(const std::string& name) {
    SymInt r;
    SymAtom atom;
    atom.symbol = name;
    atom.key = "s:" + name;
    r.terms_[{atom}] = 1;
    return r;
}

bool SymInt::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

std::optional<std::int64_t> SymInt::constant() const {
    if (terms_.empty()) {
        return 0;
    }
    if (terms_.size() == 1 && terms_.begin()->first.empty()) {
        return terms_.begin()->second;
    }
    return std::nullopt;
}

void SymInt::add_term(const Monomial& m, std::int64_t coeff) {
    if (coeff == 0) {
        return;
    }
    auto it = terms_.find(m);
    if (it == terms_.end()) {
        terms_.emplace(m, coeff);
        return;
    }
    it->second = checked_add(it->second, coeff);
    if (it->second == 0) {
        terms_.erase(it);
    }
}

SymInt SymInt::operator-() const {
    SymInt r;
    for (const auto& [m, c] : terms_) {
        r.terms_[m] = checked_mul(c, -1);
    }
    return r;
}

SymInt operator+(const SymInt& a, const SymInt& b) {
    SymInt r = a;
    for (const auto& [m, c] : b.terms_) {
        r.add_term(m, c);
    }
    return r;
}

SymInt operator-(const SymInt& a, const SymInt& b) { return a + (-b); }

SymInt operator*(const SymInt& a, const SymInt& b) {
    SymInt r;
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) {
            SymInt::Monomial m = ma;
            m.insert(m.end(), mb.begin(), mb.end());
            std::sort(m.begin(), m.end());
            r.add_term(m, checked_mul(ca, cb));
        }
    }
    return r;
}

SymInt SymInt::floor_atom(const SymInt& num, const SymInt& den) {
    SymAtom atom;
    atom.num = std::make_shared<const SymInt>(num);
    atom.den = std::make_shared<const SymInt>(den);
    atom.key = "f:(" + num.str() + ")//(" + den.str() + ")";
    SymInt r;
    r.terms_[{atom}] = 1;
    return r;
}

SymInt SymInt::floordiv(const SymInt& a, const SymInt& b) {
    auto d = b.constant();
    if (!d) {
        if (a == b) {
            return 1;
        }
        if (a.terms_.empty()) {
            return 0;
        }
        return floor_atom(a, b);
    }
    if (*d == 0) {
        throw Error(ErrorCode::Schema, "division by zero in shape arithmetic");
    }
    if (auto c = a.constant()) {
        return floor_div(*c, *d);
    }
    if (*d < 0) {
        return floordiv(-a, -*d);
    }
    if (*d == 1) {
        return a;
    }

    // a = d*q + r with every coefficient of r in [0, d); floor(a/d) = q + floor(r/d)
    SymInt quotient;
    SymInt rest;
    for (const auto& [m, c] : a.terms_) {
        quotient.add_term(m, floor_div(c, *d));
        rest.add_term(m, floor_mod(c, *d));
    }
    if (rest.terms_.empty()) {
        return quotient;
    }
    if (rest.is_constant()) {
        return quotient;  // 0 <= rest < d
    }

    std::int64_t g = *d;
    for (const auto& [m, c] : rest.terms_) {
        g = std::gcd(g, c);
    }
    std::int64_t den = *d;
    if (g > 1) {
        SymInt reduced;
        for (const auto& [m, c] : rest.terms_) {
            reduced.add_term(m, c / g);
        }
        rest = reduced;
        den /= g;
        if (den == 1) {
            return quotient + rest;
        }
    }

    // floor(floor(p/d1)/d2) = floor(p/(d1*d2)) for positive d1, d2
    if (rest.terms_.size() == 1) {
        const auto& [m, c] = *rest.terms_.begin();
        if (c == 1 && m.size() == 1 && m[0].num) {
            if (auto inner = m[0].den->constant(); inner && *inner > 0) {
                return quotient + floordiv(*m[0].num, checked_mul(*inner, den));
            }
        }
    }
    return quotient + floor_atom(rest, den);
}

SymInt SymInt::mod(const SymInt& a, const SymInt& b) { return a - b * floordiv(a, b); }

std::string SymInt::str() const {
    if (terms_.empty()) {
        return "0";
    }
    std::string out;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        std::int64_t mag = c < 0 ? -c : c;
        if (first) {
            if (c < 0) {
                out += "-";
            }
        } else {
            out += c < 0 ? " - " : " + ";
        }
        first = false;
        if (m.empty()) {
            out += std::to_string(mag);
            continue;
        }
        bool product = mag != 1 || m.size() > 1;
        std::string body;
        if (mag != 1) {
            body = std::to_string(mag);
        }
        for (const auto& atom : m) {
            if (!body.empty()) {
                body += "*";
            }
            std::string t = atom_text(atom);
            body += (atom.num && (product || c < 0)) ? "(" + t + ")" : t;
        }
        out += body;
    }
    return out;
}

}  // namespace protoml
