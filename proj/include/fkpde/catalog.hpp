#pragma once

#include <string>
#include <vector>

#include "fkpde/problem.hpp"

namespace fkpde {

/// Parameters shared by the built-in problems. Not every problem reads every field.
struct CatalogOptions {
    int d = 1;
    double T = 0.1;
    double diffusion = 0.5;   ///< a = diffusion * I
    double amplitude = 1.0;   ///< u0 = amplitude * sin(2 pi mode x_0)
    int mode = 1;
    double potential = 0.0;   ///< constant V for constant-potential
    double V_amp = 0.2;       ///< V = V_amp cos(2 pi x_0)
    double g_amp = 0.3;       ///< g = g_amp cos(2 pi x_0)
    double F_amp = 0.5;
    double alpha = 0.05;      ///< weight of the trace of r3 in outer-test
    double beta = 1.0;        ///< kpz
    std::string V_csv, g_csv, u0_csv;
};

/// heat, constant-potential, nonlinear-test, outer-test, navier-stokes, factored-F, blowup-demo.
/// The KPZ-type system lives in transforms.hpp.
ProblemSpec make_problem(const std::string& name, const CatalogOptions& opts);
std::vector<std::string> catalog_names();

/// Periodic field on a regular lattice read from CSV rows `x[,y[,z]],value`, multilinear in between.
class TabulatedField {
public:
    static TabulatedField from_csv(const std::string& path, int d);
    TabulatedField(Lattice lat, std::vector<double> values);
    void evaluate(const Points& x, std::span<double> out) const;
    const Lattice& lattice() const { return lat_; }

private:
    Lattice lat_;
    std::vector<double> values_;
};

// Batch helpers used by catalog coefficients (dispatch through the active kernel table).
void cos2pi_axis(const Points& x, int axis, double freq, double amp, std::span<double> out);
void sin2pi_axis(const Points& x, int axis, double freq, double amp, std::span<double> out);
/// out[i] = amp * sin(r[i])
void sin_batch(std::span<const double> r, double amp, std::span<double> out);

}  // namespace fkpde
