#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

namespace stopflow {

/**
 * Monotone reflection boundary g tabulated on an x-grid starting at 0.
 *
 * Between nodes g is linear; beyond the last node it keeps its last value.
 * Values must lie in (0,1] and be nondecreasing; decreasing input is
 * rejected rather than repaired.
 */
class Boundary {
public:
    Boundary() = default;
    Boundary(std::vector<double> x_nodes, std::vector<double> y_values);

    static Boundary tabulate(const std::vector<double>& x_nodes,
                             const std::function<double(double)>& g);

    double operator()(double x) const;

    /// Generalized left inverse: smallest x with g(x) >= y, for
    /// y in [g(0), g(last node)]. Returns x_hat at y = 1 when g reaches 1.
    double inverse(double y) const;

    /// First node where g equals 1; +infinity if g never reaches 1.
    double x_hat() const noexcept { return x_hat_; }

    /// True when values strictly increase up to x_hat (or the last node).
    bool strictly_increasing_before_hat() const;

    const std::vector<double>& x_nodes() const noexcept { return x_; }
    const std::vector<double>& y_values() const noexcept { return y_; }
    std::size_t size() const noexcept { return x_.size(); }
    double front() const { return y_.front(); }
    double back() const { return y_.back(); }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    double x_hat_ = std::numeric_limits<double>::infinity();
};

/// Writes `x,y` rows with 17 significant digits.
void write_boundary_csv(const std::filesystem::path& path, const Boundary& g);
/// Reads a file produced by write_boundary_csv (header `x,y`).
Boundary read_boundary_csv(const std::filesystem::path& path);

}  // namespace stopflow
