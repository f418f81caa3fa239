#include "bermex/payoffs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bermex {

std::string to_string(PayoffKind kind) {
    switch (kind) {
        case PayoffKind::MaxCall: return "max_call";
        case PayoffKind::Put: return "put";
        case PayoffKind::ArithmeticBasketPut: return "arithmetic_basket_put";
        case PayoffKind::ArithmeticBasketCall: return "arithmetic_basket_call";
        case PayoffKind::GeometricBasketCall: return "geometric_basket_call";
    }
    return "?";
}

PayoffKind payoff_kind_from_string(const std::string& name) {
    for (auto kind : {PayoffKind::MaxCall, PayoffKind::Put, PayoffKind::ArithmeticBasketPut,
                      PayoffKind::ArithmeticBasketCall, PayoffKind::GeometricBasketCall}) {
        if (to_string(kind) == name) return kind;
    }
    throw std::invalid_argument("unknown payoff '" + name + "'");
}

void Contract::validate() const {
    if (!(strike > 0.0)) throw std::invalid_argument("strike must be positive");
    if (assets < 1) throw std::invalid_argument("contract needs at least one asset");
    if (state_offset < 0) throw std::invalid_argument("state offset must be non-negative");
    if (kind == PayoffKind::Put && assets != 1) throw std::invalid_argument("put is a single-asset payoff");
}

double payoff(const Contract& c, std::span<const double> x) {
    if (static_cast<int>(x.size()) != c.state_dim())
        throw std::invalid_argument("state has " + std::to_string(x.size()) + " components, contract expects " +
                                    std::to_string(c.state_dim()));
    const auto s = x.subspan(static_cast<std::size_t>(c.state_offset));
    const double d = static_cast<double>(c.assets);
    switch (c.kind) {
        case PayoffKind::MaxCall: return std::max(*std::max_element(s.begin(), s.end()) - c.strike, 0.0);
        case PayoffKind::Put: return std::max(c.strike - s[0], 0.0);
        case PayoffKind::ArithmeticBasketPut: {
            double sum = 0.0;
            for (double v : s) sum += v;
            return std::max(c.strike - sum / d, 0.0);
        }
        case PayoffKind::ArithmeticBasketCall: {
            double sum = 0.0;
            for (double v : s) sum += v;
            return std::max(sum / d - c.strike, 0.0);
        }
        case PayoffKind::GeometricBasketCall: {
            double log_sum = 0.0;
            for (double v : s) log_sum += std::log(v);
            return std::max(std::exp(log_sum / d) - c.strike, 0.0);
        }
    }
    return 0.0;
}

double discount(double r, double t_from, double t_to) {
    if (t_to < t_from) throw std::invalid_argument("discount needs t_to >= t_from");
    return std::exp(-r * (t_to - t_from));
}

}  // namespace bermex
