#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "abstain/types.hpp"

namespace abstain {

enum class ClassKind { Finite, Linear };

class FunctionClass;
using ClassPtr = std::shared_ptr<const FunctionClass>;

// One member of a regression class F: X -> [0,1]. Finite members are rows of
// the class table; linear members carry their weight vector. Evaluation is
// clamped to [0,1] and clamp events are counted on the owning class.
struct RegressionFunction {
    ClassPtr owner;
    int id = -1;                  // finite: row index; linear: -1
    std::vector<double> weights;  // linear only

    double operator()(const Point& p) const;
};

/// The regression class: finite tabular rows over the domain's cells, or a
/// norm-bounded linear class with a per-cell feature map.
class FunctionClass : public std::enable_shared_from_this<FunctionClass> {
  public:
    static ClassPtr make_finite(std::vector<std::vector<double>> table, double complexity = 0.0);
    static ClassPtr make_linear(std::vector<std::vector<double>> features, double weight_bound,
                                double complexity = 0.0);

    ClassKind kind() const { return kind_; }
    int size() const { return static_cast<int>(table_.size()); }  // finite only
    int dim() const { return dim_; }
    int num_points() const { return num_points_; }
    double weight_bound() const { return weight_bound_; }
    double complexity() const { return complexity_; }

    const std::vector<std::vector<double>>& table() const { return table_; }
    const std::vector<double>& features(int region) const {
        return features_.at(static_cast<std::size_t>(region));
    }

    RegressionFunction member(int id) const;
    RegressionFunction linear_member(std::vector<double> weights) const;

    double value(int member_id, int region) const { return table_[member_id][region]; }

    std::uint64_t clamp_events() const { return clamp_events_.load(std::memory_order_relaxed); }
    void count_clamp() const { clamp_events_.fetch_add(1, std::memory_order_relaxed); }

  private:
    FunctionClass() = default;

    ClassKind kind_ = ClassKind::Finite;
    std::vector<std::vector<double>> table_;     // finite: [member][region]
    std::vector<std::vector<double>> features_;  // linear: [region][dim]
    double weight_bound_ = 0.0;
    int dim_ = 0;
    int num_points_ = 0;
    double complexity_ = 1.0;
    mutable std::atomic<std::uint64_t> clamp_events_{0};
};

double evaluate(const RegressionFunction& f, const Point& p);
int induced_label(const RegressionFunction& f, const Point& p);  // sgn(2 f(x) - 1), tie -> +1

/// Loads a finite class from plain text: one row per function, whitespace
/// separated values on the domain's support points. Lines starting with '#'
/// are skipped.
ClassPtr load_finite_class(const std::string& path);
std::string finite_class_to_text(const FunctionClass& cls);

}  // namespace abstain
