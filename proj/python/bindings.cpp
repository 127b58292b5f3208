// Python bindings. Fields cross the boundary as NumPy arrays shaped like the
// grid, Fortran order, so axis 0 varies fastest as in the C++ layout.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "emq/action.hpp"
#include "emq/errors.hpp"
#include "emq/grid.hpp"
#include "emq/madelung.hpp"
#include "emq/measurement.hpp"
#include "emq/microdynamics.hpp"
#include "emq/schrodinger.hpp"
#include "emq/thermo.hpp"

namespace py = pybind11;
using namespace emq;

namespace {

using RealArray = py::array_t<double, py::array::f_style | py::array::forcecast>;
using ComplexArray = py::array_t<std::complex<double>, py::array::f_style | py::array::forcecast>;

std::vector<py::ssize_t> shape_of(const Grid& g) {
  std::vector<py::ssize_t> shape;
  for (std::size_t k = 0; k < g.dims(); ++k) shape.push_back(static_cast<py::ssize_t>(g.points(k)));
  return shape;
}

template <class T, class Array>
BasicField<T> to_field(const Grid& g, const Array& a) {
  if (static_cast<std::size_t>(a.size()) != g.size()) throw InvalidArgument("array size does not match the grid");
  return BasicField<T>(g, std::vector<T>(a.data(), a.data() + a.size()));
}

template <class T>
py::array_t<T> to_array(const BasicField<T>& f) {
  py::array_t<T, py::array::f_style> out(shape_of(f.grid()));
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

WaveFunction to_wave(const Grid& g, const ComplexArray& psi, double hbar, double mass) {
  return {to_field<std::complex<double>>(g, psi), hbar, mass};
}

Scheme scheme_from(const std::string& s) {
  if (s == "auto") return Scheme::automatic;
  if (s == "crank-nicolson") return Scheme::crank_nicolson;
  if (s == "split-step") return Scheme::split_step;
  throw InvalidArgument("scheme must be auto, crank-nicolson or split-step");
}

py::tuple evolution_result(const Evolution& ev) {
  py::list frames;
  for (const auto& f : ev.frames) frames.append(to_array(f.psi));
  return py::make_tuple(ev.times, frames);
}

}  // namespace

PYBIND11_MODULE(_emq, m) {
  m.doc() = "Learning dynamics, emergent quantum mechanics and measurement on finite grids";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<NoMultivaluedStructure>(m, "NoMultivaluedStructure", PyExc_ValueError);

  py::class_<Grid>(m, "Grid")
      .def(py::init([](const std::vector<std::tuple<double, double, std::size_t, std::string>>& axes) {
             std::vector<AxisSpec> specs;
             for (const auto& [lo, hi, n, b] : axes) specs.push_back({lo, hi, n, boundary_from_string(b)});
             return Grid(std::span<const AxisSpec>(specs));
           }),
           py::arg("axes"), "Axes as (lower, upper, points, boundary) tuples.")
      .def_property_readonly("dims", &Grid::dims)
      .def_property_readonly("size", &Grid::size)
      .def_property_readonly("shape", [](const Grid& g) { return shape_of(g); })
      .def("spacing", &Grid::spacing)
      .def("coordinates", [](const Grid& g, std::size_t k) {
        if (k >= g.dims()) throw InvalidArgument("axis out of range");
        std::vector<double> c(g.points(k));
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = g.coordinate(k, i);
        return c;
      });

  // grid operators
  m.def("integrate", [](const Grid& g, const RealArray& f) { return integrate(to_field<double>(g, f)); });
  m.def("laplacian", [](const Grid& g, const RealArray& f) { return to_array(laplacian(to_field<double>(g, f))); });
  m.def("gradient", [](const Grid& g, const RealArray& f) {
    const VectorField v = gradient(to_field<double>(g, f));
    py::list out;
    for (std::size_t k = 0; k < v.dims(); ++k) out.append(to_array(v.component(k)));
    return out;
  });

  // microdynamics
  py::class_<FreeEnergyModel>(m, "FreeEnergy")
      .def_static("constant", &FreeEnergyModel::constant, py::arg("c") = 0.0)
      .def_static("quadratic_well", &FreeEnergyModel::quadratic_well, py::arg("stiffness"),
                  py::arg("center") = Point3{})
      .def_static("double_well", &FreeEnergyModel::double_well, py::arg("depth"), py::arg("half_separation"))
      .def("value", &FreeEnergyModel::value)
      .def_property_readonly("name", &FreeEnergyModel::name);

  m.def(
      "langevin",
      [](const Grid& g, const FreeEnergyModel& F, double gamma, double D, double dt, std::size_t steps,
         std::size_t count, Point3 start, std::uint64_t seed) {
        ParticleEnsemble ens = ParticleEnsemble::at_point(g, count, start, seed);
        langevin_run(ens, F, {gamma, D, 1.0}, dt, steps);
        py::list out;
        for (std::size_t k = 0; k < g.dims(); ++k) out.append(ens.coordinates(k));
        return out;
      },
      py::arg("grid"), py::arg("free_energy"), py::arg("gamma"), py::arg("diffusion"), py::arg("dt"), py::arg("steps"),
      py::arg("count"), py::arg("start") = Point3{}, py::arg("seed") = 0,
      "Final coordinates of `count` trajectories, one list per axis.");
  m.def(
      "fokker_planck",
      [](const Grid& g, const RealArray& p0, const FreeEnergyModel& F, double gamma, double D, double dt,
         std::size_t steps) {
        const auto r = evolve_fokker_planck(to_field<double>(g, p0), F, {gamma, D, 1.0}, dt, steps,
                                            {TimeScheme::implicit_euler, std::max<std::size_t>(steps, 1)});
        return to_array(r.frames.back());
      },
      py::arg("grid"), py::arg("p0"), py::arg("free_energy"), py::arg("gamma"), py::arg("diffusion"), py::arg("dt"),
      py::arg("steps"));
  m.def(
      "stationary_density",
      [](const Grid& g, const FreeEnergyModel& F, double gamma, double D) {
        return to_array(stationary_density(g, F, {gamma, D, 1.0}));
      },
      py::arg("grid"), py::arg("free_energy"), py::arg("gamma"), py::arg("diffusion"));

  // thermo
  m.def(
      "neuron_count",
      [](double pool_size, double activation, double mu, double T) {
        const NeuronCount c = mean_and_delta_N(GrandPotentialModel::independent_pool(pool_size, activation), mu, T);
        return py::make_tuple(c.mean, c.delta);
      },
      py::arg("pool_size"), py::arg("activation"), py::arg("mu"), py::arg("temperature"),
      "(<N>, Delta N) of the independent-neuron pool.");
  m.def(
      "sample_pool",
      [](std::size_t size, double activation, double T, double mu, std::size_t start, std::size_t sweeps,
         std::uint64_t seed) { return sample_pool({size, activation, T, mu, start}, sweeps, seed); },
      py::arg("pool_size"), py::arg("activation"), py::arg("temperature"), py::arg("mu"), py::arg("start"),
      py::arg("sweeps"), py::arg("seed"));
  m.def("planck_from_mu", [](double mu, double eps) { return planck_from_mu(mu, eps); }, py::arg("mu"),
        py::arg("eps") = 1.0);
  m.def("lambda_from_hbar", &lambda_from_hbar, py::arg("diffusion"), py::arg("gamma"), py::arg("eps"), py::arg("hbar"));

  // action
  m.def("shannon_entropy", [](const Grid& g, const RealArray& p) { return shannon_entropy(to_field<double>(g, p)); });
  m.def("fisher_production",
        [](const Grid& g, const RealArray& p, double D) { return fisher_production(to_field<double>(g, p), D); });
  m.def("fisher_gradient_form",
        [](const Grid& g, const RealArray& p, double D) { return fisher_gradient_form(to_field<double>(g, p), D); });

  // schrodinger
  m.def(
      "gaussian_packet",
      [](const Grid& g, Point3 center, double width, Point3 momentum, double hbar, double mass) {
        return to_array(gaussian_packet(g, center, width, momentum, hbar, mass).psi);
      },
      py::arg("grid"), py::arg("center"), py::arg("width"), py::arg("momentum") = Point3{}, py::arg("hbar") = 1.0,
      py::arg("mass") = 1.0);
  m.def(
      "assemble",
      [](const Grid& g, const RealArray& p, const RealArray& F, double eps, double hbar) {
        return to_array(assemble(to_field<double>(g, p), to_field<double>(g, F), eps, hbar, 1.0).psi);
      },
      py::arg("grid"), py::arg("p"), py::arg("F"), py::arg("eps"), py::arg("hbar"));
  m.def(
      "decompose",
      [](const Grid& g, const ComplexArray& psi, double hbar, double mass, double eps) {
        const Decomposition d = decompose(to_wave(g, psi, hbar, mass), eps);
        py::dict out;
        out["density"] = to_array(d.density);
        out["free_energy"] = to_array(d.free_energy);
        out["free_energy_period"] = d.free_energy_period;
        out["total_winding"] = d.total_winding;
        return out;
      },
      py::arg("grid"), py::arg("psi"), py::arg("hbar") = 1.0, py::arg("mass") = 1.0, py::arg("eps") = 1.0);
  m.def(
      "evolve",
      [](const Grid& g, const ComplexArray& psi, const RealArray& V, double dt, std::size_t steps, double hbar,
         double mass, const std::string& scheme, std::size_t record_every) {
        return evolution_result(
            evolve(to_wave(g, psi, hbar, mass), to_field<double>(g, V), dt, steps, {scheme_from(scheme), record_every}));
      },
      py::arg("grid"), py::arg("psi"), py::arg("V"), py::arg("dt"), py::arg("steps"), py::arg("hbar") = 1.0,
      py::arg("mass") = 1.0, py::arg("scheme") = "auto", py::arg("record_every") = 1, "(times, frames)");
  m.def(
      "energy",
      [](const Grid& g, const ComplexArray& psi, const RealArray& V, double hbar, double mass) {
        return energy(to_wave(g, psi, hbar, mass), to_field<double>(g, V));
      },
      py::arg("grid"), py::arg("psi"), py::arg("V"), py::arg("hbar") = 1.0, py::arg("mass") = 1.0);
  m.def(
      "stationary_states",
      [](const Grid& g, const RealArray& V, double mass, double hbar, std::size_t count) {
        const Spectrum s = stationary_states(g, to_field<double>(g, V), mass, hbar, count);
        py::list states;
        for (const auto& w : s.states) states.append(to_array(w.psi));
        return py::make_tuple(s.energies, states);
      },
      py::arg("grid"), py::arg("V"), py::arg("mass") = 1.0, py::arg("hbar") = 1.0, py::arg("count") = 1,
      "(energies, states)");

  // madelung
  m.def(
      "quantum_potential",
      [](const Grid& g, const RealArray& p, double hbar, double mass) {
        return to_array(quantum_potential(to_field<double>(g, p), hbar, mass));
      },
      py::arg("grid"), py::arg("p"), py::arg("hbar") = 1.0, py::arg("mass") = 1.0);
  m.def(
      "circulation",
      [](const Grid& g, const ComplexArray& psi, double hbar, double mass, std::size_t i0, std::size_t j0,
         std::size_t i1, std::size_t j1) {
        return circulation(to_madelung(to_wave(g, psi, hbar, mass)), rectangle_loop(g, i0, j0, i1, j1));
      },
      py::arg("grid"), py::arg("psi"), py::arg("hbar"), py::arg("mass"), py::arg("i0"), py::arg("j0"), py::arg("i1"),
      py::arg("j1"), "Circulation of the wavefunction's flow around a lattice rectangle.");
  m.def(
      "madelung_evolve",
      [](const Grid& g, const ComplexArray& psi, const RealArray& V, double duration, double hbar, double mass) {
        MadelungState st = to_madelung(to_wave(g, psi, hbar, mass));
        const ScalarField pot = to_field<double>(g, V);
        while (st.time < duration * (1 - 1e-12)) {
          st = madelung_step(st, pot, std::min(recommended_dt(st), duration - st.time));
        }
        return to_array(st.density());
      },
      py::arg("grid"), py::arg("psi"), py::arg("V"), py::arg("duration"), py::arg("hbar") = 1.0,
      py::arg("mass") = 1.0, "Density after hydrodynamic evolution of the wavefunction's (p, S).");

  // measurement
  m.def("unitary", py::overload_cast<const CMatrix&, double, double>(&unitary), py::arg("H"), py::arg("t"),
        py::arg("hbar") = 1.0);
  m.def("random_hermitian", &random_hermitian, py::arg("M"), py::arg("seed"));
  m.def("random_state", [](std::size_t M, std::uint64_t seed) { return random_state(M, seed).amplitudes; },
        py::arg("M"), py::arg("seed"));
  m.def(
      "random_diagonal_set",
      [](std::size_t M, std::size_t count, std::uint64_t seed) { return random_diagonal_set(M, count, seed).operators; },
      py::arg("M"), py::arg("count"), py::arg("seed"));
  m.def(
      "measure",
      [](const CVector& psi, const std::vector<CMatrix>& ops) { return measure({psi}, {ops, false}); },
      py::arg("psi"), py::arg("operators"));
  m.def(
      "measure_diagonal",
      [](const CVector& psi, const std::vector<CMatrix>& ops) { return measure_diagonal({psi}, {ops, true}); },
      py::arg("psi"), py::arg("operators"));
  m.def(
      "conjugated_operators",
      [](const std::vector<CMatrix>& ops, const CMatrix& H, double t, double hbar) {
        return conjugated_operators({ops, true}, {H, HamiltonianRole::post, t}, hbar).operators;
      },
      py::arg("operators"), py::arg("H"), py::arg("t"), py::arg("hbar") = 1.0);
  m.def(
      "post_evolve",
      [](const CVector& psi, const CMatrix& H, double t, double hbar) {
        return post_evolve({psi}, {H, HamiltonianRole::post, t}, hbar).amplitudes;
      },
      py::arg("psi"), py::arg("H"), py::arg("t"), py::arg("hbar") = 1.0);
  m.def(
      "sample_counts",
      [](const std::vector<double>& p, std::size_t n, std::uint64_t seed) { return sample_counts(p, n, seed); },
      py::arg("probabilities"), py::arg("n"), py::arg("seed"));
}
