#include "fairshift/grid.hpp"

#include "fairshift/errors.hpp"

#include <charconv>
#include <cmath>

namespace fairshift {

std::vector<double> linspace(double lo, double hi, size_t n) {
    std::vector<double> out;
    if (n == 0) return out;
    if (n == 1) return {lo};
    out.reserve(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) out.push_back(lo + step * static_cast<double>(i));
    out.push_back(hi);
    return out;
}

namespace {

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ValidationError("not a finite number: '" + s + "'");
    return v;
}

} // namespace

std::vector<double> parse_axis(const std::string& text) {
    const auto a = text.find(':');
    const auto b = a == std::string::npos ? a : text.find(':', a + 1);
    if (b == std::string::npos || text.find(':', b + 1) != std::string::npos)
        throw ValidationError("axis must be lo:hi:n, got '" + text + "'");
    const double lo = parse_double(text.substr(0, a));
    const double hi = parse_double(text.substr(a + 1, b - a - 1));
    const std::string count = text.substr(b + 1);
    size_t n = 0;
    const auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), n);
    if (ec != std::errc() || ptr != count.data() + count.size()) throw ValidationError("axis count must be an integer");
    if (lo > hi) throw ValidationError("axis lower end exceeds upper end");
    return linspace(lo, hi, n);
}

} // namespace fairshift
