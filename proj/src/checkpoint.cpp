#include <bit>
#include <cstring>
#include <fstream>

#include "subrl/errors.hpp"
#include "subrl/policy.hpp"

namespace subrl {
namespace {

constexpr const char* kFormat = "subrl-policy-v1";

void put_le64(std::ostream& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

double get_le64(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const Policy& policy, const std::string& path) {
  nlohmann::json header = policy.header();
  header["format"] = kFormat;
  header["num_params"] = policy.num_params();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << header.dump() << '\n';
  for (double x : policy.params()) put_le64(out, x);
  if (!out) throw InputError("failed writing checkpoint '" + path + "'");
}

std::unique_ptr<Policy> policy_from_header(const nlohmann::json& header) {
  try {
    const auto kind = header.at("kind").get<std::string>();
    const auto& arch = header.at("arch");
    const auto& obs = header.at("obs_spec");
    const int actions = arch.at("num_actions").get<int>();
    if (kind == "tabular_softmax")
      return std::make_unique<TabularSoftmaxPolicy>(obs.at("num_states").get<int>(), actions,
                                                    obs.at("horizon").get<int>());
    if (kind == "mlp" || kind == "history_mlp") {
      const auto hidden = arch.at("hidden").get<std::vector<int>>();
      if (hidden.size() != 2) throw InputError("MLP checkpoint must list two hidden widths");
      return std::make_unique<MlpPolicy>(ObservationSpec::from_json(obs), hidden[0], hidden[1], actions);
    }
    throw InputError("unknown policy kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("policy header: ") + e.what());
  }
}

std::unique_ptr<Policy> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("checkpoint '" + path + "' has no header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("checkpoint header is not JSON: " + std::string(e.what()));
  }
  if (header.value("format", std::string{}) != kFormat) throw InputError("unrecognized checkpoint format");
  auto policy = policy_from_header(header);
  const auto n = header.at("num_params").get<std::size_t>();
  if (n != policy->num_params())
    throw InputError("checkpoint holds " + std::to_string(n) + " parameters but the architecture needs " +
                     std::to_string(policy->num_params()));
  std::vector<unsigned char> payload(n * 8);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) throw InputError("checkpoint payload truncated");
  auto theta = policy->params();
  for (std::size_t i = 0; i < n; ++i) theta[i] = get_le64(payload.data() + 8 * i);
  return policy;
}

}  // namespace subrl
