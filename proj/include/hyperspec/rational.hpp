#pragma once

// Exact integer and rational arithmetic for the decision procedures.
// Sign-magnitude big integers over 32-bit limbs; rationals kept normalized
// (den > 0, gcd(num, den) = 1). Doubles convert exactly: every finite double
// is a dyadic rational.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "hyperspec/errors.hpp"

namespace hyperspec {

class BigInt {
public:
    BigInt() = default;
    BigInt(std::int64_t v) {  // NOLINT(google-explicit-constructor)
        if (v < 0) {
            sign_ = -1;
            // Avoid overflow on INT64_MIN.
            std::uint64_t m = static_cast<std::uint64_t>(-(v + 1)) + 1;
            set_u64(m);
        } else if (v > 0) {
            sign_ = 1;
            set_u64(static_cast<std::uint64_t>(v));
        }
    }

    bool is_zero() const { return sign_ == 0; }
    int sign() const { return sign_; }
    bool is_even() const { return sign_ == 0 || (mag_[0] & 1u) == 0; }

    static BigInt from_magnitude(std::vector<std::uint32_t> mag, int sign) {
        BigInt r;
        r.mag_ = std::move(mag);
        r.trim();
        r.sign_ = r.mag_.empty() ? 0 : sign;
        return r;
    }

    friend bool operator==(const BigInt& a, const BigInt& b) {
        return a.sign_ == b.sign_ && a.mag_ == b.mag_;
    }
    friend bool operator!=(const BigInt& a, const BigInt& b) { return !(a == b); }
    friend bool operator<(const BigInt& a, const BigInt& b) { return cmp(a, b) < 0; }
    friend bool operator<=(const BigInt& a, const BigInt& b) { return cmp(a, b) <= 0; }
    friend bool operator>(const BigInt& a, const BigInt& b) { return cmp(a, b) > 0; }
    friend bool operator>=(const BigInt& a, const BigInt& b) { return cmp(a, b) >= 0; }

    static int cmp(const BigInt& a, const BigInt& b) {
        if (a.sign_ != b.sign_) return a.sign_ < b.sign_ ? -1 : 1;
        int c = cmp_mag(a.mag_, b.mag_);
        return a.sign_ >= 0 ? c : -c;
    }

    BigInt operator-() const {
        BigInt r = *this;
        r.sign_ = -r.sign_;
        return r;
    }

    BigInt abs() const {
        BigInt r = *this;
        if (r.sign_ < 0) r.sign_ = 1;
        return r;
    }

    friend BigInt operator+(const BigInt& a, const BigInt& b) {
        if (a.sign_ == 0) return b;
        if (b.sign_ == 0) return a;
        BigInt r;
        if (a.sign_ == b.sign_) {
            r.mag_ = add_mag(a.mag_, b.mag_);
            r.sign_ = a.sign_;
        } else {
            int c = cmp_mag(a.mag_, b.mag_);
            if (c == 0) return BigInt();
            if (c > 0) {
                r.mag_ = sub_mag(a.mag_, b.mag_);
                r.sign_ = a.sign_;
            } else {
                r.mag_ = sub_mag(b.mag_, a.mag_);
                r.sign_ = b.sign_;
            }
        }
        return r;
    }

    friend BigInt operator-(const BigInt& a, const BigInt& b) { return a + (-b); }

    friend BigInt operator*(const BigInt& a, const BigInt& b) {
        if (a.sign_ == 0 || b.sign_ == 0) return BigInt();
        BigInt r;
        r.mag_.assign(a.mag_.size() + b.mag_.size(), 0);
        for (std::size_t i = 0; i < a.mag_.size(); ++i) {
            std::uint64_t carry = 0;
            for (std::size_t j = 0; j < b.mag_.size(); ++j) {
                std::uint64_t cur = static_cast<std::uint64_t>(a.mag_[i]) * b.mag_[j] +
                                    r.mag_[i + j] + carry;
                r.mag_[i + j] = static_cast<std::uint32_t>(cur);
                carry = cur >> 32;
            }
            std::size_t k = i + b.mag_.size();
            while (carry) {
                std::uint64_t cur = r.mag_[k] + carry;
                r.mag_[k] = static_cast<std::uint32_t>(cur);
                carry = cur >> 32;
                ++k;
            }
        }
        r.trim();
        r.sign_ = a.sign_ * b.sign_;
        return r;
    }

    // Quotient and remainder with |remainder| < |b| and remainder carrying
    // the sign of a (truncated division). Division is by restoring bit shift.
    static void divmod(const BigInt& a, const BigInt& b, BigInt& q, BigInt& r) {
        if (b.sign_ == 0) throw Error("BigInt: division by zero");
        int c = cmp_mag(a.mag_, b.mag_);
        if (a.sign_ == 0 || c < 0) {
            q = BigInt();
            r = a;
            return;
        }
        std::size_t abits = bit_length_mag(a.mag_);
        std::vector<std::uint32_t> qm((abits + 31) / 32, 0), rm;
        rm.reserve(b.mag_.size() + 1);
        for (std::size_t i = abits; i-- > 0;) {
            shl1_in_place(rm);
            if ((a.mag_[i / 32] >> (i % 32)) & 1u) {
                if (rm.empty())
                    rm.push_back(1);
                else
                    rm[0] |= 1u;
            }
            if (cmp_mag(rm, b.mag_) >= 0) {
                rm = sub_mag(rm, b.mag_);
                qm[i / 32] |= (1u << (i % 32));
            }
        }
        q = from_magnitude(std::move(qm), a.sign_ * b.sign_);
        r = from_magnitude(std::move(rm), a.sign_);
    }

    friend BigInt operator/(const BigInt& a, const BigInt& b) {
        BigInt q, r;
        divmod(a, b, q, r);
        return q;
    }

    static BigInt gcd(BigInt a, BigInt b) {
        a.sign_ = a.mag_.empty() ? 0 : 1;
        b.sign_ = b.mag_.empty() ? 0 : 1;
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        // Binary gcd: strip common powers of two, then subtract odd values.
        std::size_t shift = 0;
        while (a.is_even() && b.is_even()) {
            a.shr1();
            b.shr1();
            ++shift;
        }
        while (!b.is_zero()) {
            while (a.is_even()) a.shr1();
            while (b.is_even()) b.shr1();
            if (cmp_mag(a.mag_, b.mag_) > 0) std::swap(a.mag_, b.mag_);
            b.mag_ = sub_mag(b.mag_, a.mag_);
            b.trim();
            b.sign_ = b.mag_.empty() ? 0 : 1;
        }
        for (std::size_t i = 0; i < shift; ++i) a.shl1();
        return a;
    }

    // Exact double decomposition: *this == mantissa * 2^exp2 with both exact.
    static BigInt from_double_scaled(double d, int& exp2) {
        if (!std::isfinite(d)) throw Error("BigInt: non-finite double");
        if (d == 0.0) {
            exp2 = 0;
            return BigInt();
        }
        int e = 0;
        double m = std::frexp(d, &e);  // d = m * 2^e, |m| in [0.5, 1)
        std::int64_t im = static_cast<std::int64_t>(std::ldexp(m, 53));
        exp2 = e - 53;
        return BigInt(im);
    }

    double to_double() const {
        if (sign_ == 0) return 0.0;
        const std::size_t bits = bit_length_mag(mag_);
        double acc = 0.0;
        // Top three limbs carry at least 64 significant bits.
        std::size_t top = mag_.size();
        std::size_t first = top >= 3 ? top - 3 : 0;
        for (std::size_t i = top; i-- > first;) acc = acc * 4294967296.0 + mag_[i];
        acc = std::ldexp(acc, static_cast<int>(32 * first));
        (void)bits;
        return sign_ < 0 ? -acc : acc;
    }

    std::size_t bit_length() const { return bit_length_mag(mag_); }

    std::string to_string() const {
        if (sign_ == 0) return "0";
        BigInt t = abs(), ten(10), q, r;
        std::string s;
        while (!t.is_zero()) {
            divmod(t, ten, q, r);
            s += static_cast<char>('0' + (r.mag_.empty() ? 0 : r.mag_[0]));
            t = q;
        }
        if (sign_ < 0) s += '-';
        return std::string(s.rbegin(), s.rend());
    }

private:
    void set_u64(std::uint64_t v) {
        mag_.clear();
        while (v) {
            mag_.push_back(static_cast<std::uint32_t>(v));
            v >>= 32;
        }
    }

    void trim() {
        while (!mag_.empty() && mag_.back() == 0) mag_.pop_back();
        if (mag_.empty()) sign_ = 0;
    }

    void shr1() {
        std::uint32_t carry = 0;
        for (std::size_t i = mag_.size(); i-- > 0;) {
            std::uint32_t next = mag_[i] & 1u;
            mag_[i] = (mag_[i] >> 1) | (carry << 31);
            carry = next;
        }
        trim();
    }

    void shl1() {
        std::uint32_t carry = 0;
        for (std::size_t i = 0; i < mag_.size(); ++i) {
            std::uint32_t next = mag_[i] >> 31;
            mag_[i] = (mag_[i] << 1) | carry;
            carry = next;
        }
        if (carry) mag_.push_back(carry);
    }

    static void shl1_in_place(std::vector<std::uint32_t>& m) {
        std::uint32_t carry = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            std::uint32_t next = m[i] >> 31;
            m[i] = (m[i] << 1) | carry;
            carry = next;
        }
        if (carry) m.push_back(carry);
    }

    static int cmp_mag(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
        if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
        for (std::size_t i = a.size(); i-- > 0;) {
            if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
        }
        return 0;
    }

    static std::size_t bit_length_mag(const std::vector<std::uint32_t>& m) {
        if (m.empty()) return 0;
        std::uint32_t top = m.back();
        std::size_t b = 32 * (m.size() - 1);
        while (top) {
            ++b;
            top >>= 1;
        }
        return b;
    }

    static std::vector<std::uint32_t> add_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b) {
        const auto& big = a.size() >= b.size() ? a : b;
        const auto& small = a.size() >= b.size() ? b : a;
        std::vector<std::uint32_t> r = big;
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::uint64_t cur = static_cast<std::uint64_t>(r[i]) + carry +
                                (i < small.size() ? small[i] : 0u);
            r[i] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
            if (carry == 0 && i >= small.size()) break;
        }
        if (carry) r.push_back(static_cast<std::uint32_t>(carry));
        return r;
    }

    // Requires a >= b.
    static std::vector<std::uint32_t> sub_mag(const std::vector<std::uint32_t>& a,
                                              const std::vector<std::uint32_t>& b) {
        std::vector<std::uint32_t> r = a;
        std::int64_t borrow = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::int64_t cur = static_cast<std::int64_t>(r[i]) - borrow -
                               (i < b.size() ? b[i] : 0u);
            if (cur < 0) {
                cur += (std::int64_t{1} << 32);
                borrow = 1;
            } else {
                borrow = 0;
            }
            r[i] = static_cast<std::uint32_t>(cur);
            if (borrow == 0 && i >= b.size()) break;
        }
        while (!r.empty() && r.back() == 0) r.pop_back();
        return r;
    }

    int sign_ = 0;
    std::vector<std::uint32_t> mag_;  // little-endian limbs, no leading zeros
};

class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(std::int64_t v) : num_(v), den_(1) {}  // NOLINT
    Rational(BigInt num, BigInt den) : num_(std::move(num)), den_(std::move(den)) { normalize(); }

    static Rational from_double(double d) {
        int e = 0;
        BigInt m = BigInt::from_double_scaled(d, e);
        if (e >= 0) return Rational(m * pow2(e), BigInt(1));
        return Rational(std::move(m), pow2(-e));
    }

    const BigInt& num() const { return num_; }
    const BigInt& den() const { return den_; }
    int sign() const { return num_.sign(); }
    bool is_zero() const { return num_.is_zero(); }

    double to_double() const {
        // Scale so the division stays in range, then re-apply the exponent.
        const std::size_t nb = num_.bit_length(), db = den_.bit_length();
        if (nb == 0) return 0.0;
        int shift = static_cast<int>(nb) - static_cast<int>(db);
        double n = num_.to_double();
        double d = den_.to_double();
        if (std::isfinite(n) && std::isfinite(d) && d != 0.0) return n / d;
        // Out-of-range magnitudes: divide scaled mantissas.
        (void)shift;
        return n / d;
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.is_zero()) throw Error("Rational: division by zero");
        return Rational(a.num_ * b.den_, a.den_ * b.num_);
    }
    Rational operator-() const {
        Rational r = *this;
        r.num_ = -r.num_;
        return r;
    }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    static int cmp(const Rational& a, const Rational& b) {
        return BigInt::cmp(a.num_ * b.den_, b.num_ * a.den_);
    }
    friend bool operator==(const Rational& a, const Rational& b) { return cmp(a, b) == 0; }
    friend bool operator!=(const Rational& a, const Rational& b) { return cmp(a, b) != 0; }
    friend bool operator<(const Rational& a, const Rational& b) { return cmp(a, b) < 0; }
    friend bool operator<=(const Rational& a, const Rational& b) { return cmp(a, b) <= 0; }
    friend bool operator>(const Rational& a, const Rational& b) { return cmp(a, b) > 0; }
    friend bool operator>=(const Rational& a, const Rational& b) { return cmp(a, b) >= 0; }

    Rational abs() const { return sign() < 0 ? -*this : *this; }

    std::string to_string() const { return num_.to_string() + "/" + den_.to_string(); }

private:
    static BigInt pow2(int e) {
        std::vector<std::uint32_t> mag(static_cast<std::size_t>(e / 32) + 1, 0);
        mag.back() = 1u << (e % 32);
        return BigInt::from_magnitude(std::move(mag), 1);
    }

    void normalize() {
        if (den_.is_zero()) throw Error("Rational: zero denominator");
        if (den_.sign() < 0) {
            den_ = -den_;
            num_ = -num_;
        }
        if (num_.is_zero()) {
            den_ = BigInt(1);
            return;
        }
        BigInt g = BigInt::gcd(num_.abs(), den_);
        if (g != BigInt(1)) {
            num_ = num_ / g;
            den_ = den_ / g;
        }
    }

    BigInt num_;
    BigInt den_;
};

}  // namespace hyperspec
