#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rrbart {

// VIP_kmp: predictor k x imputation m x posterior draw p.
class VipDraws {
 public:
  VipDraws() = default;
  VipDraws(std::size_t k, std::size_t m, std::size_t p) : k_(k), m_(m), p_(p), data_(k * m * p, 0.0) {}

  std::size_t predictors() const { return k_; }
  std::size_t imputations() const { return m_; }
  std::size_t draws() const { return p_; }

  double at(std::size_t k, std::size_t m, std::size_t p) const { return data_[(k * m_ + m) * p_ + p]; }
  double& at(std::size_t k, std::size_t m, std::size_t p) { return data_[(k * m_ + m) * p_ + p]; }

  // Mean over imputations and draws for each predictor.
  std::vector<double> predictor_means() const;

  // CSV: one row per (imputation, draw), one column per predictor.
  std::string to_csv(const std::vector<std::string>& names) const;

 private:
  std::size_t k_ = 0, m_ = 0, p_ = 0;
  std::vector<double> data_;
};

}  // namespace rrbart
