#pragma once

#include <cstdint>
#include <vector>

#include "fedchain/dataset.hpp"

namespace fedchain {

// L2-regularized logistic objective over the index subset:
//   (1/|I|) * sum_i log(1 + exp(-y_i <w, x_i>)) + (lambda/2) |w|^2
// Sample terms use the softplus form that stays finite for any margin.
double logistic_loss(const std::vector<double>& w, const SparseDataset& ds,
                     const std::vector<std::uint32_t>& indices, double lambda);

// convenience over all rows
double logistic_loss(const std::vector<double>& w, const SparseDataset& ds, double lambda);

// -y * sigmoid(-y <w,x>), the scalar multiplying x in the sample gradient
double loss_coefficient(const std::vector<double>& w, const SparseDataset& ds, std::uint32_t row);

// gradient of the single sample term: loss_coefficient * x + lambda * w
std::vector<double> sample_gradient(const std::vector<double>& w, const SparseDataset& ds,
                                    std::uint32_t row, double lambda);

// mean of sample gradients over the subset
std::vector<double> logistic_gradient(const std::vector<double>& w, const SparseDataset& ds,
                                      const std::vector<std::uint32_t>& indices, double lambda);

std::vector<double> logistic_gradient(const std::vector<double>& w, const SparseDataset& ds,
                                      double lambda);

// sign of the margin; zero margin predicts +1
int predict(const std::vector<double>& w, const SparseRow& row);

double accuracy(const std::vector<double>& w, const SparseDataset& ds);

double l2_norm(const std::vector<double>& v);
double l1_norm(const std::vector<double>& v);

}  // namespace fedchain
