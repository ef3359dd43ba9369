#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mimex/env.hpp"

namespace mimex {

struct RoomsOptions {
  bool random_start = false;  // uniform room+cell instead of the fixed start
  std::size_t max_steps = 500;
};

// Gridworld noisy-TV testbed: four 8x8 rooms in a chain plus a dead-end
// corridor hanging off the start room.
//
//   [R0 start] - [R1] - [R2] - [R3 goal]
//        |
//   [corridor, 1x8, TV]
//
// Doors join (3,7) of a room to (3,0) of the next; the corridor is entered by
// moving down from R0's cell (7,3) into corridor cell (0,3). The corridor is
// the TV room: while the agent stands anywhere in it, the last observation
// slot carries a fresh uniform sample every step (it reads exactly 0
// elsewhere). Keeping the TV in the dead end means no agent has to pass it to
// reach the goal — time spent there is attraction, not transit.
// Observation: one-hot room id (5) ++ normalized (row, col) ++ tv slot.
class RoomsEnv final : public Environment {
 public:
  static constexpr int kRoomCount = 5;  // R0..R3 and the corridor
  static constexpr int kCorridor = 4;
  static constexpr int kTvRoom = kCorridor;
  static constexpr int kGoalRoom = 3;

  explicit RoomsEnv(std::uint64_t seed, RoomsOptions opts = {})
      : opts_(opts), base_rng_(Rng(seed).fork("rooms")), tv_rng_(0), start_rng_(0) {
    spec_.name = "rooms";
    spec_.observation_dim = 8;  // 5 + 2 + 1
    spec_.action_dim = 4;       // up, down, left, right
    spec_.action_kind = ActionKind::discrete;
    spec_.action_bound_kind = BoundKind::per_axis;
    spec_.action_bound = 0.0;
    spec_.net_scale = std::vector<double>(8, 1.0);
    reset();
  }

  const EnvSpec& spec() const override { return spec_; }

  Tensor reset() override {
    tv_rng_ = base_rng_.fork("tv", episode_);
    start_rng_ = base_rng_.fork("start", episode_);
    ++episode_;
    steps_ = 0;
    room_ = 0;
    row_ = 3;
    col_ = 3;
    if (opts_.random_start) {
      do {
        room_ = int(start_rng_.integer(4));
        row_ = int(start_rng_.integer(8));
        col_ = int(start_rng_.integer(8));
      } while (room_ == kGoalRoom && row_ == kGoalRow && col_ == kGoalCol);
    }
    return observation();
  }

  StepResult step(const Tensor& raw_action) override {
    Tensor a = clamp_action(spec_, raw_action);
    apply_move(int(a[0]));
    ++steps_;
    bool at_goal = room_ == kGoalRoom && row_ == kGoalRow && col_ == kGoalCol;
    bool capped = opts_.max_steps > 0 && steps_ >= opts_.max_steps;
    return {observation(), at_goal ? 1.0 : 0.0, at_goal || capped};
  }

  // Global grid coordinates: room i occupies columns [9i, 9i+7], the corridor
  // sits on row 9 under R0.
  std::array<double, 2> position2d() const override {
    if (room_ == kCorridor) return {9.0, double(col_)};
    return {double(row_), double(9 * room_ + col_)};
  }

  int room() const { return room_; }
  int row() const { return row_; }
  int col() const { return col_; }
  bool in_tv_room() const { return room_ == kTvRoom; }

 private:
  static constexpr int kGoalRow = 3;
  static constexpr int kGoalCol = 7;

  int room_height(int room) const { return room == kCorridor ? 1 : 8; }
  int room_width(int) const { return 8; }

  void apply_move(int action) {
    int dr = 0;
    int dc = 0;
    switch (action) {
      case 0: dr = -1; break;  // up
      case 1: dr = 1; break;   // down
      case 2: dc = -1; break;  // left
      case 3: dc = 1; break;   // right
      default: return;
    }
    int nr = row_ + dr;
    int nc = col_ + dc;

    // Door transitions first, then in-room moves; anything else is a wall.
    if (room_ < kGoalRoom && row_ == 3 && col_ == 7 && dc == 1) {
      ++room_;
      col_ = 0;
      return;
    }
    if (room_ >= 1 && room_ <= kGoalRoom && row_ == 3 && col_ == 0 && dc == -1) {
      --room_;
      col_ = 7;
      return;
    }
    if (room_ == 0 && row_ == 7 && col_ == 3 && dr == 1) {
      room_ = kCorridor;
      row_ = 0;
      return;
    }
    if (room_ == kCorridor && row_ == 0 && col_ == 3 && dr == -1) {
      room_ = 0;
      row_ = 7;
      return;
    }
    if (nr >= 0 && nr < room_height(room_) && nc >= 0 && nc < room_width(room_)) {
      row_ = nr;
      col_ = nc;
    }
  }

  Tensor observation() {
    Tensor obs({8});
    obs[std::size_t(room_)] = 1.0;
    obs[5] = (row_ + 0.5) / room_height(room_);
    obs[6] = (col_ + 0.5) / room_width(room_);
    obs[7] = in_tv_room() ? tv_rng_.uniform(0.0, 1.0) : 0.0;
    return obs;
  }

  RoomsOptions opts_;
  EnvSpec spec_;
  Rng base_rng_;
  Rng tv_rng_;
  Rng start_rng_;
  std::uint64_t episode_ = 0;
  std::size_t steps_ = 0;
  int room_ = 0;
  int row_ = 3;
  int col_ = 3;
};

}  // namespace mimex
