#include "abstain/function_class.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace abstain {

void Domain::validate() const {
    if (cells.empty()) throw ConfigError("domain has no cells");
    double total = 0.0;
    for (const Cell& c : cells) {
        if (!(c.mass >= 0.0) || !std::isfinite(c.mass)) throw ConfigError("cell mass must be nonnegative");
        total += c.mass;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("cell masses must sum to 1");
}

ClassPtr FunctionClass::make_finite(std::vector<std::vector<double>> table, double complexity) {
    if (table.empty()) throw ConfigError("finite class needs at least one member");
    const std::size_t n = table.front().size();
    if (n == 0) throw ConfigError("finite class rows must be nonempty");
    for (const auto& row : table) {
        if (row.size() != n) throw ConfigError("finite class rows must have equal length");
        for (double v : row)
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw ConfigError("finite class values must lie in [0,1]");
    }
    auto cls = std::shared_ptr<FunctionClass>(new FunctionClass());
    cls->kind_ = ClassKind::Finite;
    cls->num_points_ = static_cast<int>(n);
    cls->complexity_ = complexity > 0.0 ? complexity : std::log(static_cast<double>(table.size()));
    if (cls->complexity_ <= 0.0) cls->complexity_ = 1.0;  // |F| = 1
    cls->table_ = std::move(table);
    return cls;
}

ClassPtr FunctionClass::make_linear(std::vector<std::vector<double>> features, double weight_bound,
                                    double complexity) {
    if (features.empty()) throw ConfigError("linear class needs at least one feature row");
    const std::size_t d = features.front().size();
    if (d == 0) throw ConfigError("feature dimension must be >= 1");
    if (!(weight_bound > 0.0)) throw ConfigError("weight_bound must be positive");
    for (const auto& row : features) {
        if (row.size() != d) throw ConfigError("feature rows must have equal length");
        for (double v : row)
            if (!std::isfinite(v)) throw ConfigError("feature values must be finite");
    }
    auto cls = std::shared_ptr<FunctionClass>(new FunctionClass());
    cls->kind_ = ClassKind::Linear;
    cls->dim_ = static_cast<int>(d);
    cls->num_points_ = static_cast<int>(features.size());
    cls->weight_bound_ = weight_bound;
    cls->complexity_ = complexity > 0.0 ? complexity : static_cast<double>(d + 1);
    cls->features_ = std::move(features);
    return cls;
}

RegressionFunction FunctionClass::member(int id) const {
    if (kind_ != ClassKind::Finite) throw ConfigError("member(id) is for finite classes");
    if (id < 0 || id >= size()) throw ConfigError("member id out of range");
    return RegressionFunction{shared_from_this(), id, {}};
}

RegressionFunction FunctionClass::linear_member(std::vector<double> weights) const {
    if (kind_ != ClassKind::Linear) throw ConfigError("linear_member is for linear classes");
    if (static_cast<int>(weights.size()) != dim_) throw ConfigError("weight dimension mismatch");
    return RegressionFunction{shared_from_this(), -1, std::move(weights)};
}

double RegressionFunction::operator()(const Point& p) const { return evaluate(*this, p); }

double evaluate(const RegressionFunction& f, const Point& p) {
    const FunctionClass& cls = *f.owner;
    if (p.region < 0 || p.region >= cls.num_points()) throw ConfigError("point outside the class domain");
    if (cls.kind() == ClassKind::Finite) {
        return cls.table()[static_cast<std::size_t>(f.id)][static_cast<std::size_t>(p.region)];
    }
    const std::vector<double>& phi = cls.features(p.region);
    if (phi.size() != f.weights.size()) throw ConfigError("feature dimension mismatch");
    double raw = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) raw += phi[i] * f.weights[i];
    if (raw < 0.0) {
        cls.count_clamp();
        return 0.0;
    }
    if (raw > 1.0) {
        cls.count_clamp();
        return 1.0;
    }
    return raw;
}

int induced_label(const RegressionFunction& f, const Point& p) { return sign_label(evaluate(f, p)); }

ClassPtr load_finite_class(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open class file: " + path);
    std::vector<std::vector<double>> table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream row(line);
        std::vector<double> values;
        double v;
        while (row >> v) values.push_back(v);
        if (!row.eof()) throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed value");
        if (values.empty()) continue;
        table.push_back(std::move(values));
    }
    return FunctionClass::make_finite(std::move(table));
}

std::string finite_class_to_text(const FunctionClass& cls) {
    std::ostringstream out;
    out << "# one row per function, columns are values on the support points\n";
    out.precision(17);
    for (const auto& row : cls.table()) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i];
        out << "\n";
    }
    return out.str();
}

}  // namespace abstain
