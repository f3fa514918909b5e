#include <gtest/gtest.h>

#include "grad_check.h"

namespace fslab::gradcheck {
namespace {

TEST(GradientTest, Dense) {
  const Mismatch m = dense_suite();
  EXPECT_GT(m.checked, 0);
  EXPECT_EQ(m.failures, 0) << "worst relative error " << m.worst_rel;
}

TEST(GradientTest, Conv2d) {
  const Mismatch m = conv2d_suite();
  EXPECT_GT(m.checked, 0);
  EXPECT_EQ(m.failures, 0) << "worst relative error " << m.worst_rel;
}

TEST(GradientTest, MaxPool2d) {
  const Mismatch m = maxpool2d_suite();
  EXPECT_GT(m.checked, 0);
  EXPECT_EQ(m.failures, 0) << "worst relative error " << m.worst_rel;
}

TEST(GradientTest, Relu) {
  const Mismatch m = relu_suite();
  EXPECT_GT(m.checked, 0);
  EXPECT_EQ(m.failures, 0) << "worst relative error " << m.worst_rel;
}

TEST(GradientTest, Sigmoid) {
  const Mismatch m = sigmoid_suite();
  EXPECT_GT(m.checked, 0);
  EXPECT_EQ(m.failures, 0) << "worst relative error " << m.worst_rel;
}

TEST(GradientTest, OneEightOneReluNetworkWithBce) {
  const Mismatch m = relu_network_bce_suite();
  EXPECT_GT(m.checked, 0);
  EXPECT_EQ(m.failures, 0) << "worst relative error " << m.worst_rel;
}

}  // namespace
}  // namespace fslab::gradcheck
