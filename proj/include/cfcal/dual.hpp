#ifndef CFCAL_DUAL_HPP
#define CFCAL_DUAL_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace cfcal {

/// Forward-mode dual number carrying N partial derivatives alongside the
/// value. Arithmetic propagates the chain rule; seed a variable's slot with
/// 1 before evaluating an expression to read its partials off the result.
template <int N>
struct Dual {
    double val = 0.0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double v) : val(v) {}

    static Dual variable(double v, int slot) {
        Dual x(v);
        x.d[slot] = 1.0;
        return x;
    }

    Dual operator-() const {
        Dual r(-val);
        for (int i = 0; i < N; ++i) r.d[i] = -d[i];
        return r;
    }

    Dual& operator+=(const Dual& o) {
        val += o.val;
        for (int i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        val -= o.val;
        for (int i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (int i = 0; i < N; ++i) d[i] = d[i] * o.val + val * o.d[i];
        val *= o.val;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        const double inv = 1.0 / o.val;
        for (int i = 0; i < N; ++i) d[i] = (d[i] - val * inv * o.d[i]) * inv;
        val *= inv;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(Dual a, const Dual& b) { return a /= b; }

    friend bool operator<(const Dual& a, const Dual& b) { return a.val < b.val; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.val > b.val; }
};

template <int N>
Dual<N> sqrt(const Dual<N>& x) {
    Dual<N> r(std::sqrt(x.val));
    const double g = 0.5 / r.val;
    for (int i = 0; i < N; ++i) r.d[i] = g * x.d[i];
    return r;
}

template <int N>
Dual<N> exp(const Dual<N>& x) {
    Dual<N> r(std::exp(x.val));
    for (int i = 0; i < N; ++i) r.d[i] = r.val * x.d[i];
    return r;
}

template <int N>
Dual<N> log(const Dual<N>& x) {
    Dual<N> r(std::log(x.val));
    const double g = 1.0 / x.val;
    for (int i = 0; i < N; ++i) r.d[i] = g * x.d[i];
    return r;
}

/// x^y for x > 0.
template <int N>
Dual<N> pow(const Dual<N>& x, const Dual<N>& y) {
    const double v = std::pow(x.val, y.val);
    Dual<N> r(v);
    const double lx = std::log(x.val);
    const double gx = y.val * std::pow(x.val, y.val - 1.0);
    for (int i = 0; i < N; ++i) r.d[i] = gx * x.d[i] + v * lx * y.d[i];
    return r;
}

template <int N>
Dual<N> pow(const Dual<N>& x, double y) {
    Dual<N> r(std::pow(x.val, y));
    const double g = y * std::pow(x.val, y - 1.0);
    for (int i = 0; i < N; ++i) r.d[i] = g * x.d[i];
    return r;
}

// Plain-double fallbacks so templated model code works for both scalar types.
inline double value_of(double x) { return x; }
template <int N>
double value_of(const Dual<N>& x) { return x.val; }

} // namespace cfcal

#endif
