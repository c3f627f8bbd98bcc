#include "cqpm/ae_lab.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "cqpm/losses.hpp"
#include "cqpm/random.hpp"
#include "cqpm/training.hpp"

namespace cqpm::ae {

namespace {

Var batch_input(Tape& tape, const Autoencoder& model, const Samples& s, const std::vector<std::size_t>& idx) {
  std::vector<double> re;
  re.reserve(idx.size() * s.dim);
  for (std::size_t i : idx) re.insert(re.end(), s.values.begin() + static_cast<std::ptrdiff_t>(i * s.dim),
                                      s.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * s.dim));
  const Shape shape{idx.size(), s.dim};
  if (!model.config().complex_input()) return tape.constant(Tensor(shape, std::move(re)));
  std::vector<cd> z;
  z.reserve(re.size());
  for (double v : re) z.push_back(std::polar(1.0, 2.0 * std::numbers::pi * v));
  return tape.constant(CTensor(shape, std::move(z)));
}

Var batch_target(Tape& tape, const Samples& s, const std::vector<std::size_t>& idx) {
  std::vector<double> v;
  for (std::size_t i : idx) v.insert(v.end(), s.values.begin() + static_cast<std::ptrdiff_t>(i * s.dim),
                                     s.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * s.dim));
  return tape.constant(Tensor({idx.size(), s.dim}, std::move(v)));
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

Samples make_samples(const StudyConfig& cfg, std::size_t first_index, std::size_t count) {
  data::DatasetSpec spec;
  spec.kind = cfg.kind;
  spec.side = cfg.image_side;
  spec.seed = cfg.seed;
  Samples s;
  s.count = count;
  s.dim = cfg.image_side * cfg.image_side;
  for (std::size_t i = 0; i < count; ++i) {
    const RealGrid g = data::synth_phase(spec, first_index + i);
    for (double v : g.data) s.values.push_back(v / (2.0 * std::numbers::pi));
  }
  return s;
}

double mse(Autoencoder& model, const Samples& s) {
  Tape tape;
  const auto idx = all_indices(s.count);
  return ad::mse_loss(model.forward(batch_input(tape, model, s, idx)), batch_target(tape, s, idx)).item();
}

FitResult fit(Autoencoder& model, const Samples& train, const Samples& test, std::size_t epochs,
              std::size_t batch_size, double lr, std::uint64_t seed) {
  if (train.dim != model.config().input_dim) throw SizeError("sample dimension does not match the autoencoder");
  const auto params = model.parameters();
  training::Adam opt(params, lr);
  Rng rng(splitmix64(seed));
  FitResult r;
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::vector<std::size_t> order = all_indices(train.count);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (std::size_t k : order) h = (h ^ k) * 1099511628211ull;
    for (std::size_t s = 0; s < order.size(); s += batch_size) {
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(s),
                                   order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), s + batch_size)));
      for (Parameter* p : params) p->zero_grad();
      Tape tape;
      tape.backward(ad::mse_loss(model.forward(batch_input(tape, model, train, idx)), batch_target(tape, train, idx)));
      opt.step();
    }
  }
  r.order_checksum = h;
  r.train_mse = mse(model, train);
  r.test_mse = mse(model, test);
  Tape tape;
  r.test_reconstruction = model.forward(batch_input(tape, model, test, {0})).values();
  return r;
}

std::vector<AEConfig> study_configs(std::size_t input_dim, std::size_t latent, std::size_t hidden, std::uint64_t seed) {
  using E = EncoderKind;
  using D = DecoderKind;
  const std::pair<E, D> pairs[] = {{E::linear, D::linear},
                                   {E::linear, D::nonlinear},
                                   {E::nonlinear, D::nonlinear},
                                   {E::complex_linear, D::nonlinear},
                                   {E::complex_nonlinear, D::nonlinear}};
  std::vector<AEConfig> out;
  for (auto [e, d] : pairs) out.push_back(AEConfig{e, d, input_dim, latent, hidden, seed});
  return out;
}

const StudyRow& StudyReport::find(const std::string& config, std::size_t latent) const {
  for (const auto& r : rows)
    if (r.config == config && r.latent_dim == latent) return r;
  throw std::out_of_range("no study row for " + config + " at latent " + std::to_string(latent));
}

bool StudyReport::on_par(const std::string& a, const std::string& b, std::size_t latent) const {
  return find(a, latent).test_mse <= on_par_factor * find(b, latent).test_mse;
}

void StudyReport::write_csv(std::ostream& os) const {
  os << "config,latent_dim,train_mse,test_mse,wall_time\n";
  for (const auto& r : rows)
    os << r.config << ',' << r.latent_dim << ',' << format_double(r.train_mse) << ',' << format_double(r.test_mse)
       << ',' << format_double(r.wall_time) << '\n';
}

StudyReport run_ae_study(const StudyConfig& cfg) {
  const Samples train = make_samples(cfg, 0, cfg.train_count);
  const Samples test = make_samples(cfg, cfg.train_count, cfg.test_count);
  StudyReport rep;
  rep.on_par_factor = cfg.on_par_factor;
  for (std::size_t latent : cfg.latent_dims)
    for (const AEConfig& ac : study_configs(train.dim, latent, cfg.hidden, cfg.seed)) {
      Autoencoder model(ac);
      const auto t0 = std::chrono::steady_clock::now();
      FitResult f = fit(model, train, test, cfg.epochs, cfg.batch_size, cfg.lr, cfg.seed);
      const auto t1 = std::chrono::steady_clock::now();
      StudyRow row;
      row.config = std::string(encoder_name(ac.encoder)) + "+" + decoder_name(ac.decoder);
      row.latent_dim = latent;
      row.train_mse = f.train_mse;
      row.test_mse = f.test_mse;
      row.wall_time = std::chrono::duration<double>(t1 - t0).count();
      row.order_checksum = f.order_checksum;
      row.sample = std::move(f.test_reconstruction);
      rep.rows.push_back(std::move(row));
    }
  return rep;
}

}  // namespace cqpm::ae
