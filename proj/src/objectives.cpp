#include "synsal/objectives.hpp"

#include <cmath>
#include <string>

#include "synsal/errors.hpp"

namespace synsal {

namespace {

constexpr double kProbClamp = 1e-7;

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + c10::str(a.sizes()) + " vs " +
                     c10::str(b.sizes()));
  }
}

void check_term(const std::optional<LossTerm>& term, Domain expected, const char* name) {
  if (term && term->domain != expected) {
    throw DomainError(std::string(name) + " must be computed on " + std::string(to_string(expected)) +
                      " images, got " + std::string(to_string(term->domain)));
  }
}

torch::Tensor weighted(const std::optional<LossTerm>& term, double weight) {
  return term ? term->value * weight : torch::Tensor();
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {lambda_s, lambda_d, lambda_init, lambda_adv_s, lambda_adv_d}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and non-negative");
  }
}

bool LossRecord::all_finite() const {
  for (double v : {init_s, init_d, fin_s, fin_d, adv_s, adv_d, disc_s, disc_d, total_G, total_D}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

torch::Tensor bce_map_loss(const torch::Tensor& pred, const torch::Tensor& target) {
  require_same_shape(pred, target, "bce_map_loss");
  {
    torch::NoGradGuard no_grad;
    require_finite(pred, "bce_map_loss prediction");
    if (!((pred >= 0) & (pred <= 1)).all().item<bool>()) {
      throw std::domain_error("bce_map_loss: prediction outside [0, 1]");
    }
  }
  auto p = pred.clamp(kProbClamp, 1.0 - kProbClamp);
  return -(target * torch::log(p) + (1 - target) * torch::log(1 - p)).mean();
}

torch::Tensor l1_map_loss(const torch::Tensor& pred, const torch::Tensor& target) {
  require_same_shape(pred, target, "l1_map_loss");
  return (pred - target).abs().mean();
}

// bce(sigmoid(x), 0) = softplus(x); bce(sigmoid(x), 1) = softplus(-x).
torch::Tensor discriminator_loss(const torch::Tensor& sup_logits, const torch::Tensor& unsup_logits) {
  return torch::softplus(sup_logits).mean() + torch::softplus(-unsup_logits).mean();
}

torch::Tensor adversarial_loss(const torch::Tensor& unsup_logits) {
  return torch::softplus(unsup_logits).mean();
}

torch::Tensor total_generator_loss(const GeneratorLossParts& parts, const LossWeights& w) {
  check_term(parts.init_s, Domain::RgbSource, "init_s");
  check_term(parts.fin_s, Domain::RgbSource, "fin_s");
  check_term(parts.init_d, Domain::RgbdSource, "init_d");
  check_term(parts.fin_d, Domain::RgbdSource, "fin_d");
  check_term(parts.adv_s, Domain::RgbdSource, "adv_s");
  check_term(parts.adv_d, Domain::RgbSource, "adv_d");

  torch::Tensor total;
  for (auto t : {weighted(parts.fin_s, w.lambda_s), weighted(parts.fin_d, w.lambda_d),
                 weighted(parts.init_s, w.lambda_init * w.lambda_s),
                 weighted(parts.init_d, w.lambda_init * w.lambda_d),
                 weighted(parts.adv_s, w.lambda_adv_s), weighted(parts.adv_d, w.lambda_adv_d)}) {
    if (t.defined()) total = total.defined() ? total + t : t;
  }
  if (!total.defined()) throw std::invalid_argument("total_generator_loss: no loss terms given");
  return total;
}

double total_generator_loss(const LossRecord& r, const LossWeights& w) {
  return w.lambda_s * r.fin_s + w.lambda_d * r.fin_d + w.lambda_init * w.lambda_s * r.init_s +
         w.lambda_init * w.lambda_d * r.init_d + w.lambda_adv_s * r.adv_s + w.lambda_adv_d * r.adv_d;
}

torch::Tensor total_discriminator_loss(const torch::Tensor& ds_loss, const torch::Tensor& dt_loss) {
  return ds_loss + dt_loss;
}

}  // namespace synsal
