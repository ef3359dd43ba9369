#include "mimex/serialize.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "mimex/mlp.hpp"
#include "mimex/rng.hpp"

namespace mimex {
namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

TEST(Serialize, NetworkBytesRoundTrip) {
  Rng rng(21);
  MlpNetwork net = MlpNetwork::glorot({3, 6, 2}, {Activation::relu, Activation::linear}, rng);
  std::string bytes = network_to_bytes(net);
  MlpNetwork back = network_from_bytes(bytes);
  EXPECT_EQ(net, back);
  EXPECT_EQ(net.param_digest(), back.param_digest());
}

TEST(Serialize, NetworkFileRoundTrip) {
  Rng rng(22);
  MlpNetwork net = MlpNetwork::glorot({2, 4, 1}, {Activation::tanh, Activation::linear}, rng);
  auto path = temp_file("mimex_net_roundtrip.bin");
  save_network(net, path);
  MlpNetwork back = load_network(path);
  EXPECT_EQ(net, back);
  std::filesystem::remove(path);
}

// Golden bytes: a single 1->1 linear layer with weight 2.0 and bias -1.0.
// Layout: "MLP1", layer count, then (in, out, act) per layer and the flat
// f64 params (weights then bias), all little-endian.
TEST(Serialize, GoldenNetworkBytes) {
  MlpNetwork net({1, 1}, {Activation::linear});
  net.layer(0).weight = Tensor::matrix(1, 1, {2.0});
  net.layer(0).bias = Tensor::vector({-1.0});
  std::string bytes = network_to_bytes(net);

  const char expected[] = {
      'M', 'L', 'P', '1',
      1, 0, 0, 0,              // layer count
      1, 0, 0, 0,              // in
      1, 0, 0, 0,              // out
      2, 0, 0, 0,              // activation tag: linear
      0, 0, 0, 0, 0, 0, 0x00, 0x40,        // 2.0
      0, 0, 0, 0, 0, 0, char(0xF0), char(0xBF),  // -1.0
  };
  EXPECT_EQ(bytes, std::string(expected, sizeof(expected)));
}

TEST(Serialize, RejectsCorruptedNetwork) {
  Rng rng(23);
  MlpNetwork net = MlpNetwork::glorot({2, 3, 1}, {Activation::relu, Activation::linear}, rng);
  std::string bytes = network_to_bytes(net);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(network_from_bytes(bad_magic), IoError);

  std::string truncated = bytes.substr(0, bytes.size() - 4);
  EXPECT_THROW(network_from_bytes(truncated), IoError);

  std::string trailing = bytes + '\0';
  EXPECT_THROW(network_from_bytes(trailing), IoError);
}

TEST(Serialize, ValuesRoundTrip) {
  std::vector<double> vals{2.0, -1.0, 0.0, 3.5};
  auto path = temp_file("mimex_vals_roundtrip.bin");
  save_values(vals, path);
  EXPECT_EQ(load_values(path), vals);
  std::filesystem::remove(path);
}

TEST(Serialize, MissingFileThrows) {
  EXPECT_THROW(load_network("/nonexistent/mimex/net.bin"), IoError);
  EXPECT_THROW(load_values("/nonexistent/mimex/vals.bin"), IoError);
}

}  // namespace
}  // namespace mimex
