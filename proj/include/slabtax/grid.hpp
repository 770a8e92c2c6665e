#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "slabtax/errors.hpp"

namespace slabtax {

/// Uniform vertex-centered mesh of the slab (0, ell).
///
/// Nodes x_i = i*ell/n_x for i = 0..n_x include both boundary points, so
/// Dirichlet/inflow data are imposed exactly at nodes.  Coordinates are
/// computed as (i*ell)/n_x rather than i*dx so that x_{n_x} == ell bitwise
/// even when dx itself is not exactly representable (e.g. ell=2, n_x=3).
class SpatialMesh {
  public:
    SpatialMesh(double ell, int n_cells) : ell_(ell), n_cells_(n_cells) {
        if (!(ell > 0.0)) throw ConfigError("SpatialMesh: ell must be positive");
        if (n_cells < 2) throw ConfigError("SpatialMesh: n_x must be >= 2");
        nodes_.resize(static_cast<std::size_t>(n_cells) + 1);
        for (int i = 0; i <= n_cells; ++i)
            nodes_[static_cast<std::size_t>(i)] = (static_cast<double>(i) * ell) / n_cells;
    }

    double ell() const { return ell_; }
    int n_cells() const { return n_cells_; }
    int n_nodes() const { return n_cells_ + 1; }
    double dx() const { return ell_ / n_cells_; }
    double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& nodes() const { return nodes_; }

  private:
    double ell_;
    int n_cells_;
    std::vector<double> nodes_;
};

/// Uniform time grid on (0, T).  T is stored; dt is always derived as T/n_t.
class TimeGrid {
  public:
    TimeGrid(double horizon, int n_steps) : horizon_(horizon), n_steps_(n_steps) {
        if (!(horizon > 0.0)) throw ConfigError("TimeGrid: T must be positive");
        if (n_steps < 1) throw ConfigError("TimeGrid: n_t must be >= 1");
    }

    double horizon() const { return horizon_; }
    int n_steps() const { return n_steps_; }
    double dt() const { return horizon_ / n_steps_; }
    double time(int n) const { return (static_cast<double>(n) * horizon_) / n_steps_; }

  private:
    double horizon_;
    int n_steps_;
};

inline SpatialMesh make_mesh(double ell, int n_x) { return SpatialMesh(ell, n_x); }
inline TimeGrid make_timegrid(double horizon, int n_t) { return TimeGrid(horizon, n_t); }

/// Velocity-independent field sampled at mesh nodes.
struct ScalarField {
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(std::size_t n, double fill = 0.0) : values(n, fill) {}

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Kinetic density u(x_i, v_k), stored row-major over nodes then velocities.
class KineticField {
  public:
    KineticField() = default;
    KineticField(int n_nodes, int n_velocities, double fill = 0.0)
        : n_nodes_(n_nodes), n_velocities_(n_velocities),
          data_(static_cast<std::size_t>(n_nodes) * static_cast<std::size_t>(n_velocities), fill) {}

    int n_nodes() const { return n_nodes_; }
    int n_velocities() const { return n_velocities_; }

    double& operator()(int i, int k) { return data_[idx(i, k)]; }
    double operator()(int i, int k) const { return data_[idx(i, k)]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void require_shape(int n_nodes, int n_velocities, const std::string& where) const {
        if (n_nodes_ != n_nodes || n_velocities_ != n_velocities)
            throw DimensionError(where + ": kinetic field is " + std::to_string(n_nodes_) + "x" +
                                 std::to_string(n_velocities_) + ", expected " +
                                 std::to_string(n_nodes) + "x" + std::to_string(n_velocities));
    }

  private:
    std::size_t idx(int i, int k) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_velocities_) +
               static_cast<std::size_t>(k);
    }

    int n_nodes_ = 0;
    int n_velocities_ = 0;
    std::vector<double> data_;
};

} // namespace slabtax
