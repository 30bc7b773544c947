#include "stopflow/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stopflow/errors.hpp"
#include "stopflow/report.hpp"

namespace stopflow {

Boundary::Boundary(std::vector<double> x_nodes, std::vector<double> y_values)
    : x_(std::move(x_nodes)), y_(std::move(y_values)) {
    if (x_.size() < 2 || x_.size() != y_.size()) {
        throw ValidationError("boundary needs at least two nodes and one value per node");
    }
    if (x_.front() != 0.0) throw ValidationError("boundary grid must start at x = 0");
    for (std::size_t i = 0; i < x_.size(); ++i) {
        if (i > 0 && !(x_[i] > x_[i - 1])) {
            throw ValidationError("boundary x nodes must be strictly increasing");
        }
        if (!(y_[i] > 0.0 && y_[i] <= 1.0)) {
            std::ostringstream os;
            os << "boundary value " << y_[i] << " at x = " << x_[i] << " outside (0,1]";
            throw ValidationError(os.str());
        }
        if (i > 0 && y_[i] < y_[i - 1]) {
            std::ostringstream os;
            os << "boundary decreases between x = " << x_[i - 1] << " and x = " << x_[i];
            throw ValidationError(os.str());
        }
    }
    const auto it = std::find(y_.begin(), y_.end(), 1.0);
    if (it != y_.end()) x_hat_ = x_[static_cast<std::size_t>(it - y_.begin())];
}

Boundary Boundary::tabulate(const std::vector<double>& x_nodes,
                            const std::function<double(double)>& g) {
    std::vector<double> ys(x_nodes.size());
    std::transform(x_nodes.begin(), x_nodes.end(), ys.begin(), g);
    return Boundary(x_nodes, std::move(ys));
}

double Boundary::operator()(double x) const {
    if (!(x >= 0.0)) throw ValidationError("boundary evaluated at negative x");
    if (x >= x_.back()) return y_.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
    const double t = (x - x_[k - 1]) / (x_[k] - x_[k - 1]);
    return y_[k - 1] + t * (y_[k] - y_[k - 1]);
}

double Boundary::inverse(double y) const {
    if (!(y >= y_.front())) {
        std::ostringstream os;
        os << "inverse: y = " << y << " below g(0) = " << y_.front();
        throw ValidationError(os.str());
    }
    if (!(y <= y_.back())) {
        std::ostringstream os;
        os << "inverse: y = " << y << " above the largest boundary value " << y_.back();
        throw ValidationError(os.str());
    }
    const auto k = static_cast<std::size_t>(std::lower_bound(y_.begin(), y_.end(), y) - y_.begin());
    if (k == 0) return x_.front();
    const double t = (y - y_[k - 1]) / (y_[k] - y_[k - 1]);
    return x_[k - 1] + t * (x_[k] - x_[k - 1]);
}

bool Boundary::strictly_increasing_before_hat() const {
    for (std::size_t i = 1; i < y_.size(); ++i) {
        if (x_[i - 1] >= x_hat_) break;
        if (!(y_[i] > y_[i - 1])) return false;
    }
    return true;
}

void write_boundary_csv(const std::filesystem::path& path, const Boundary& g) {
    CsvWriter w(path, {"x", "y"});
    for (std::size_t i = 0; i < g.size(); ++i) w.row({g.x_nodes()[i], g.y_values()[i]});
    w.close();
}

Boundary read_boundary_csv(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    if (t.header.size() != 2 || t.header[0] != "x" || t.header[1] != "y") {
        throw IoError(path.string() + ": expected header x,y");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& r : t.rows) {
        xs.push_back(r[0]);
        ys.push_back(r[1]);
    }
    return Boundary(std::move(xs), std::move(ys));
}

}  // namespace stopflow
