// Calibrates the expected pairwise-vs-sequential drift envelope for the
// builtin classifier and freezes it into tests/fixtures/drift_bound.json.
//
// Method: for each seed, run the classifier in float under both reduction
// orders through the normal harness, then recompute the forward pass with an
// independent double-precision interpreter (plain sequential loops, written
// here, sharing no code with the runtime kernels). Each float run's distance
// to the double oracle bounds its rounding error; the distance between the
// two float runs is at most the sum of the two. The frozen bound doubles
// that worst observed sum.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "driftcheck/runner.hpp"
#include "json.hpp"

namespace {

using driftcheck::GraphModel;
using driftcheck::Node;
using driftcheck::OpKind;
using driftcheck::Shape;
using driftcheck::Tensor;

struct DTensor {
  Shape shape;
  std::vector<double> data;

  std::int64_t dim(std::size_t i) const { return shape[i]; }
};

DTensor from_f32(const Tensor& t) {
  DTensor d;
  d.shape = t.shape();
  d.data.reserve(t.numel());
  for (float v : t.f32()) d.data.push_back(static_cast<double>(v));
  return d;
}

DTensor conv2d(const DTensor& x, const DTensor& w, const DTensor& b,
               std::int64_t stride, std::int64_t pad) {
  const std::int64_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::int64_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::int64_t oh = (h + 2 * pad - kh) / stride + 1;
  const std::int64_t ow = (wd + 2 * pad - kw) / stride + 1;
  DTensor out{{n, co, oh, ow},
              std::vector<double>(std::size_t(n * co * oh * ow), 0.0)};
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t oc = 0; oc < co; ++oc)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xx = 0; xx < ow; ++xx) {
          double acc = b.data[std::size_t(oc)];
          for (std::int64_t ic = 0; ic < ci; ++ic)
            for (std::int64_t ky = 0; ky < kh; ++ky)
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                const std::int64_t sy = y * stride - pad + ky;
                const std::int64_t sx = xx * stride - pad + kx;
                if (sy < 0 || sy >= h || sx < 0 || sx >= wd) continue;
                acc += x.data[std::size_t(((in * ci + ic) * h + sy) * wd + sx)] *
                       w.data[std::size_t(((oc * ci + ic) * kh + ky) * kw + kx)];
              }
          out.data[std::size_t(((in * co + oc) * oh + y) * ow + xx)] = acc;
        }
  return out;
}

DTensor relu(DTensor x) {
  for (auto& v : x.data) v = v > 0.0 ? v : 0.0;
  return x;
}

DTensor maxpool2d(const DTensor& x, std::int64_t k, std::int64_t stride) {
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
  DTensor out{{n, c, oh, ow},
              std::vector<double>(std::size_t(n * c * oh * ow), 0.0)};
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t ic = 0; ic < c; ++ic)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xx = 0; xx < ow; ++xx) {
          double best = -std::numeric_limits<double>::infinity();
          for (std::int64_t ky = 0; ky < k; ++ky)
            for (std::int64_t kx = 0; kx < k; ++kx) {
              const double v = x.data[std::size_t(
                  ((in * c + ic) * h + y * stride + ky) * w + xx * stride +
                  kx)];
              if (v > best) best = v;
            }
          out.data[std::size_t(((in * c + ic) * oh + y) * ow + xx)] = best;
        }
  return out;
}

DTensor global_avg_pool(const DTensor& x) {
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  DTensor out{{n, c, 1, 1}, std::vector<double>(std::size_t(n * c), 0.0)};
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t ic = 0; ic < c; ++ic) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < h * w; ++i)
        acc += x.data[std::size_t((in * c + ic) * h * w + i)];
      out.data[std::size_t(in * c + ic)] = acc / double(h * w);
    }
  return out;
}

DTensor flatten(const DTensor& x) {
  std::int64_t rest = 1;
  for (std::size_t i = 1; i < x.shape.size(); ++i) rest *= x.shape[i];
  return DTensor{{x.dim(0), rest}, x.data};
}

DTensor linear(const DTensor& x, const DTensor& w, const DTensor& b) {
  const std::int64_t n = x.dim(0), fin = x.dim(1), fout = w.dim(0);
  DTensor out{{n, fout}, std::vector<double>(std::size_t(n * fout), 0.0)};
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t o = 0; o < fout; ++o) {
      double acc = b.data[std::size_t(o)];
      for (std::int64_t i = 0; i < fin; ++i)
        acc += x.data[std::size_t(in * fin + i)] *
               w.data[std::size_t(o * fin + i)];
      out.data[std::size_t(in * fout + o)] = acc;
    }
  return out;
}

DTensor softmax_rows(const DTensor& x) {
  const std::int64_t n = x.dim(0), c = x.dim(1);
  DTensor out{{n, c}, std::vector<double>(std::size_t(n * c), 0.0)};
  for (std::int64_t in = 0; in < n; ++in) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < c; ++i)
      m = std::max(m, x.data[std::size_t(in * c + i)]);
    double s = 0.0;
    for (std::int64_t i = 0; i < c; ++i) {
      const double e = std::exp(x.data[std::size_t(in * c + i)] - m);
      out.data[std::size_t(in * c + i)] = e;
      s += e;
    }
    for (std::int64_t i = 0; i < c; ++i)
      out.data[std::size_t(in * c + i)] /= s;
  }
  return out;
}

DTensor run_oracle(const GraphModel& model,
                   const std::map<std::string, Tensor>& inputs) {
  std::map<std::string, DTensor> values;
  for (const auto& [name, t] : inputs) values.emplace(name, from_f32(t));
  for (const auto& [name, t] : model.initializers)
    values.emplace(name, from_f32(t));
  for (const Node& n : model.nodes) {
    DTensor out;
    switch (n.op) {
      case OpKind::Conv2d:
        out = conv2d(values.at(n.inputs[0]), values.at(n.inputs[1]),
                     values.at(n.inputs[2]), driftcheck::attr_int(n, "stride", 1),
                     driftcheck::attr_int(n, "padding", 0));
        break;
      case OpKind::Relu:
        out = relu(values.at(n.inputs[0]));
        break;
      case OpKind::MaxPool2d: {
        const std::int64_t k = driftcheck::attr_int(n, "kernel", 1);
        out = maxpool2d(values.at(n.inputs[0]), k,
                        driftcheck::attr_int(n, "stride", k));
        break;
      }
      case OpKind::GlobalAvgPool:
        out = global_avg_pool(values.at(n.inputs[0]));
        break;
      case OpKind::Flatten:
        out = flatten(values.at(n.inputs[0]));
        break;
      case OpKind::Linear:
        out = linear(values.at(n.inputs[0]), values.at(n.inputs[1]),
                     values.at(n.inputs[2]));
        break;
      case OpKind::Softmax:
        out = softmax_rows(values.at(n.inputs[0]));
        break;
      default:
        throw std::runtime_error("oracle does not cover op: " + n.id);
    }
    values.emplace(n.output, std::move(out));
  }
  return values.at(model.outputs.front());
}

double max_abs_vs(const Tensor& t, const DTensor& ref) {
  double m = 0.0;
  const auto f = t.f32();
  for (std::size_t i = 0; i < f.size(); ++i)
    m = std::max(m, std::abs(double(f[i]) - ref.data[i]));
  return m;
}

double max_abs_between(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  const auto fa = a.f32(), fb = b.f32();
  for (std::size_t i = 0; i < fa.size(); ++i)
    m = std::max(m, std::abs(double(fa[i]) - double(fb[i])));
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace driftcheck;
  const std::filesystem::path out_path =
      argc > 1 ? argv[1] : "tests/fixtures/drift_bound.json";
  constexpr int kSeeds = 100;

  RunConfig cfg;
  cfg.model = "classifier";
  cfg.inputs = {SyntheticInputSpec{{1, 3, 32, 32}, std::nullopt}};
  cfg.options.repeats = 1;

  const BackendSpec seq = make_reference_spec();
  const BackendSpec pair = make_optimized_spec();

  double max_eps_seq = 0.0, max_eps_pair = 0.0, max_sum = 0.0;
  double max_pair_diff = 0.0;
  int nonzero = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const GraphModel model = build_model(cfg, std::uint64_t(seed));
    const auto inputs = build_inputs(cfg, model, std::uint64_t(seed));
    const DTensor oracle = run_oracle(model, inputs);
    const ExecutionTrace trace_seq = execute(model, inputs, seq, false, 1);
    const ExecutionTrace trace_pair = execute(model, inputs, pair, false, 1);
    const Tensor& o_seq = trace_seq.outputs.at("probs");
    const Tensor& o_pair = trace_pair.outputs.at("probs");
    const double eps_seq = max_abs_vs(o_seq, oracle);
    const double eps_pair = max_abs_vs(o_pair, oracle);
    const double diff = max_abs_between(o_seq, o_pair);
    max_eps_seq = std::max(max_eps_seq, eps_seq);
    max_eps_pair = std::max(max_eps_pair, eps_pair);
    max_sum = std::max(max_sum, eps_seq + eps_pair);
    max_pair_diff = std::max(max_pair_diff, diff);
    if (diff > 0.0) ++nonzero;
  }

  nlohmann::ordered_json j;
  j["model"] = "classifier";
  j["input_shape"] = {1, 3, 32, 32};
  j["seeds"] = kSeeds;
  j["bound"] = 2.0 * max_sum;
  j["max_eps_sequential"] = max_eps_seq;
  j["max_eps_pairwise"] = max_eps_pair;
  j["max_observed_diff"] = max_pair_diff;
  j["nonzero_diffs"] = nonzero;
  j["method"] =
      "2 * max over seeds of (max|f32_seq - f64| + max|f32_pair - f64|), "
      "f64 from the independent interpreter in "
      "tools/calibrate_drift_bound.cpp";

  std::filesystem::create_directories(out_path.parent_path());
  std::ofstream out(out_path);
  out << j.dump(2) << "\n";
  std::cout << "wrote " << out_path.string() << "\n"
            << "bound=" << j["bound"].dump()
            << " nonzero_diffs=" << nonzero << "/" << kSeeds << "\n";
  return 0;
}
