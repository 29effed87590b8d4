#pragma once

// Synthetic NSL-KDD-format text for tests that cannot rely on the real
// dataset files. Classes have distinct feature distributions so the learners
// have something to find.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace idslab::testing {

inline std::string make_kdd_text(std::size_t n, std::uint64_t seed, bool with_difficulty = true) {
  static constexpr std::array<std::array<const char*, 2>, 5> kAttacks = {{{"normal", "normal"},
                                                                          {"neptune", "smurf"},
                                                                          {"satan", "ipsweep"},
                                                                          {"guess_passwd", "warezmaster"},
                                                                          {"buffer_overflow", "rootkit"}}};
  static constexpr std::array<double, 5> kShare = {0.45, 0.3, 0.12, 0.08, 0.05};
  static constexpr std::array<const char*, 3> kProto = {"tcp", "udp", "icmp"};
  static constexpr std::array<const char*, 5> kService = {"http", "private", "ftp_data", "smtp", "eco_i"};
  static constexpr std::array<const char*, 4> kFlag = {"SF", "S0", "REJ", "RSTO"};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::discrete_distribution<int> pick_class(kShare.begin(), kShare.end());
  std::ostringstream os;
  for (std::size_t i = 0; i < n; ++i) {
    // Guarantee every class appears in small fixtures.
    const int c = i < 5 ? static_cast<int>(i) : pick_class(rng);
    const char* proto = kProto[c == 2 ? 2 : (c == 1 && u(rng) < 0.5 ? 2 : (u(rng) < 0.8 ? 0 : 1))];
    const char* service = kService[(c + (u(rng) < 0.7 ? 0 : 1 + static_cast<int>(u(rng) * 3))) % 5];
    const char* flag = kFlag[c == 1 ? 1 : (c == 2 ? 2 : (u(rng) < 0.9 ? 0 : 3))];
    const double duration = c == 3 ? std::floor(u(rng) * 500) : (u(rng) < 0.9 ? 0 : std::floor(u(rng) * 50));
    const double src = std::floor(std::exp(u(rng) * (c == 0 ? 9.0 : c == 1 ? 2.0 : 5.0)));
    const double dst = c == 0 ? std::floor(std::exp(u(rng) * 10.0)) : 0.0;
    const int hot = c == 4 ? 1 + static_cast<int>(u(rng) * 3) : 0;
    const int logged_in = c == 0 || c == 4 ? 1 : 0;
    const int root_shell = c == 4 && u(rng) < 0.6 ? 1 : 0;
    const int count = c == 1 ? 100 + static_cast<int>(u(rng) * 400) : static_cast<int>(u(rng) * 20);
    const int srv_count = static_cast<int>(u(rng) * 30);
    auto rate = [&](double base) { return std::round(std::clamp(base + 0.1 * (u(rng) - 0.5), 0.0, 1.0) * 100) / 100; };
    const double serror = rate(c == 1 ? 0.95 : 0.02);
    const double rerror = rate(c == 2 ? 0.9 : 0.03);
    const double same_srv = rate(c == 0 ? 0.9 : 0.2);
    const int dst_host_count = static_cast<int>(u(rng) * 255);
    const int dst_host_srv_count = c == 0 ? 200 + static_cast<int>(u(rng) * 55) : static_cast<int>(u(rng) * 30);

    os << duration << ',' << proto << ',' << service << ',' << flag << ',' << src << ',' << dst
       << ",0,0,0," << hot << ",0," << logged_in << ",0," << root_shell << ",0,0,0,0,0,0,0,0," << count
       << ',' << srv_count << ',' << serror << ',' << serror << ',' << rerror << ',' << rerror << ','
       << same_srv << ',' << rate(0.05) << ',' << rate(0.1) << ',' << dst_host_count << ','
       << dst_host_srv_count << ',' << same_srv << ',' << rate(0.05) << ',' << rate(0.1) << ','
       << rate(0.0) << ',' << serror << ',' << serror << ',' << rerror << ',' << rerror << ','
       << kAttacks[c][u(rng) < 0.5 ? 0 : 1];
    if (with_difficulty) os << ',' << 10 + static_cast<int>(u(rng) * 11);
    os << '\n';
  }
  return os.str();
}

}  // namespace idslab::testing
