#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lgmreg/corrnet.hpp"
#include "lgmreg/datagen.hpp"
#include "lgmreg/error.hpp"
#include "lgmreg/evalbench.hpp"
#include "lgmreg/features.hpp"
#include "lgmreg/latent_gmm.hpp"
#include "lgmreg/mt_solver.hpp"

namespace py = pybind11;
using namespace lgmreg;

namespace {

using Matrix4 = Eigen::Matrix4d;

PointCloud cloud(const PointMatrix& points) { return PointCloud(points); }

RigidTransform transform(const Matrix4& H) { return RigidTransform::from_homogeneous(H); }

py::dict gmm_to_dict(const Gmm& g) {
  py::dict d;
  d["weights"] = g.weights;
  d["means"] = Eigen::MatrixX3d(g.means);
  d["variances"] = g.variances;
  return d;
}

Gmm gmm_from(const Eigen::VectorXd& weights, const Eigen::MatrixX3d& means, const Eigen::VectorXd& variances) {
  Gmm g{weights, means, variances};
  g.validate();
  return g;
}

Method method_of(const std::string& name) { return parse_method(name); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rigid point cloud registration through latent Gaussian mixtures";
  m.attr("__version__") = LGMREG_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<DegenerateConfiguration>(m, "DegenerateConfiguration", base.ptr());
  py::register_exception<DegenerateMixture>(m, "DegenerateMixture", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def(
      "random_rotation", [](std::uint64_t seed) {
        Rng rng(seed);
        return Mat3(random_rotation(rng));
      },
      py::arg("seed"), "Haar-uniform rotation matrix.");
  m.def(
      "apply_transform", [](const Matrix4& T, const PointMatrix& points) {
        return PointMatrix(apply_transform(transform(T), cloud(points)).matrix());
      },
      py::arg("transform"), py::arg("points"));

  m.def(
      "weighted_umeyama",
      [](const Eigen::MatrixX3d& source, const Eigen::MatrixX3d& target, const Eigen::VectorXd& weights) {
        WeightedCorrespondences c{source, target, weights, {}};
        return Matrix4(weighted_umeyama(c).homogeneous());
      },
      py::arg("source"), py::arg("target"), py::arg("weights"),
      "Proper rigid transform minimizing sum_j w_j |R s_j + t - d_j|^2, as a 4x4 matrix.");

  m.def(
      "m_theta", [](const Gamma& gamma, const PointMatrix& points) { return gmm_to_dict(m_theta(gamma, cloud(points))); },
      py::arg("gamma"), py::arg("points"), "Closed-form mixture parameters from responsibilities.");
  m.def(
      "posterior_gamma",
      [](const PointMatrix& points, const Eigen::VectorXd& w, const Eigen::MatrixX3d& mu, const Eigen::VectorXd& var) {
        return Gamma(posterior_gamma(cloud(points), gmm_from(w, mu, var)));
      },
      py::arg("points"), py::arg("weights"), py::arg("means"), py::arg("variances"));
  m.def(
      "em_fit",
      [](const PointMatrix& points, std::size_t J, int iters, std::uint64_t seed) {
        Rng rng = make_rng(seed, "em_fit");
        const EmFitResult r = em_fit_traced(cloud(points), J, iters, rng);
        py::dict d = gmm_to_dict(r.gmm);
        d["log_likelihood"] = r.log_likelihood_trace;
        return d;
      },
      py::arg("points"), py::arg("components"), py::arg("iters") = 100, py::arg("seed") = 0);

  m.def(
      "invariant_features", [](const PointMatrix& points, std::size_t k) {
        return FeatureMatrix(invariant_features(cloud(points), k));
      },
      py::arg("points"), py::arg("neighbors") = kDefaultNeighbors);

  m.def("shape_families", [] {
    std::vector<std::string> names;
    for (ShapeFamily f : all_shape_families()) names.push_back(to_string(f));
    return names;
  });
  m.def(
      "sample_shape", [](const std::string& family, std::size_t N, std::uint64_t seed) {
        return PointMatrix(sample_shape(ShapeSpec::random(parse_shape_family(family), seed), N).matrix());
      },
      py::arg("family"), py::arg("points"), py::arg("seed") = 0);
  m.def(
      "make_pair",
      [](const PointMatrix& points, double noise_variance, std::uint64_t seed) {
        Rng rng(seed);
        const RegistrationPair p = make_pair(cloud(points), noise_variance, rng);
        return py::make_tuple(PointMatrix(p.source.matrix()), PointMatrix(p.target.matrix()),
                              Matrix4(p.gt.homogeneous()));
      },
      py::arg("points"), py::arg("noise_variance") = 0.0, py::arg("seed") = 0,
      "Returns (source, target, gt) with target = gt(source) + noise.");

  m.def(
      "rmse",
      [](const Matrix4& T, const Matrix4& T_gt, const PointMatrix& points, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return rmse(transform(T), transform(T_gt), cloud(points), n, rng);
      },
      py::arg("T"), py::arg("T_gt"), py::arg("points"), py::arg("n") = kRmseSamples, py::arg("seed") = 0,
      "(1/n) sqrt(sum of squared point errors) over n sampled points.");
  m.def(
      "recall", [](const std::vector<double>& errors, double tau) { return recall(errors, tau); },
      py::arg("errors"), py::arg("tau") = kRecallThreshold);
  m.def(
      "icp",
      [](const PointMatrix& source, const PointMatrix& target, const Matrix4& initial, int iters) {
        return Matrix4(icp_point2point(cloud(source), cloud(target), transform(initial), iters).homogeneous());
      },
      py::arg("source"), py::arg("target"), py::arg("initial") = Matrix4::Identity(),
      py::arg("iters") = kDefaultIcpIterations);

  py::class_<Checkpoint>(m, "Model", "Trained correspondence network.")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(p, c); })
      .def_property_readonly("components", [](const Checkpoint& c) { return c.params.components(); })
      .def_property_readonly("neighbors", [](const Checkpoint& c) { return c.neighbors; })
      .def_property_readonly("input_mode", [](const Checkpoint& c) { return to_string(c.input_mode); })
      .def(
          "correspondences",
          [](const Checkpoint& c, const PointMatrix& points) {
            return Gamma(forward(c.params, compute_features(cloud(points), c.input_mode, c.neighbors)));
          },
          py::arg("points"))
      .def(
          "register",
          [](const Checkpoint& c, const PointMatrix& source, const PointMatrix& target, bool refine_icp) {
            MethodOptions opt;
            opt.params = &c.params;
            opt.pipeline.input_mode = c.input_mode;
            opt.pipeline.neighbors = c.neighbors;
            opt.refine = refine_icp;
            return Matrix4(run_method(Method::kLatent, cloud(source), cloud(target), opt).homogeneous());
          },
          py::arg("source"), py::arg("target"), py::arg("refine") = false);

  m.def(
      "untrained_model", [](std::size_t components, std::uint64_t seed, std::size_t neighbors) {
        Rng rng = make_rng(seed, "init");
        Checkpoint c;
        c.neighbors = neighbors;
        c.params = CorrNetParams::initialize(feature_dimension(c.input_mode, neighbors), components, rng);
        return c;
      },
      py::arg("components") = 16, py::arg("seed") = 0, py::arg("neighbors") = kDefaultNeighbors);

  m.def(
      "train",
      [](const std::filesystem::path& train_split, std::size_t epochs, std::size_t batch_size, std::size_t components,
         std::uint64_t seed) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.components = components;
        cfg.seed = seed;
        const TrainResult r = train(read_split(train_split), cfg);
        Checkpoint c;
        c.params = r.params;
        c.input_mode = cfg.pipeline.input_mode;
        c.neighbors = cfg.pipeline.neighbors;
        std::vector<double> history;
        for (const EpochStats& e : r.history) history.push_back(e.val_loss);
        return py::make_tuple(c, history);
      },
      py::arg("train_split"), py::arg("epochs") = 30, py::arg("batch_size") = 16, py::arg("components") = 16,
      py::arg("seed") = 0, "Trains on a split directory; returns (model, per-epoch validation loss).");

  m.def(
      "generate_dataset",
      [](const std::string& protocol, std::size_t train, std::size_t test, std::size_t points, std::uint64_t seed,
         const std::filesystem::path& out) {
        write_dataset(build_dataset(parse_protocol(protocol), {train, test, points}, seed), out);
      },
      py::arg("protocol"), py::arg("train"), py::arg("test"), py::arg("points"), py::arg("seed"), py::arg("out"));

  m.def(
      "evaluate",
      [](const std::filesystem::path& split, const std::string& method, const Checkpoint* model, bool oracle) {
        MethodOptions opt;
        if (model) {
          opt.params = &model->params;
          opt.pipeline.input_mode = model->input_mode;
          opt.pipeline.neighbors = model->neighbors;
        }
        EvalOptions eval;
        eval.oracle = oracle;
        const EvalResult r = evaluate(read_split(split), method_of(method), opt, eval);
        py::dict d;
        d["recall"] = r.recall;
        d["mean_rmse"] = r.mean_rmse;
        d["errors"] = r.errors();
        d["failures"] = r.failures;
        return d;
      },
      py::arg("split"), py::arg("method"), py::arg("model") = nullptr, py::arg("oracle") = false);
}
