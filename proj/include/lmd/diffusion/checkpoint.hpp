#pragma once

#include <filesystem>
#include <string>

#include "lmd/diffusion/model.hpp"
#include "lmd/diffusion/schedule.hpp"

namespace lmd::diffusion {

// On disk: one text header line
//   lmd-checkpoint 1 channels=.. height=.. width=.. widths=a,b,c,d time_dim=.. steps=.. beta_start=.. beta_end=.. seed=..
// followed by every parameter tensor, in declaration order, as raw
// little-endian float32.
struct Checkpoint {
    EpsilonModel model;
    std::size_t steps;
    double beta_start;
    double beta_end;

    NoiseSchedule schedule() const { return NoiseSchedule::linear(steps, beta_start, beta_end); }
};

std::string checkpoint_header(const EpsilonModel& model, const NoiseSchedule& schedule);
void save_checkpoint(const std::filesystem::path& path, const EpsilonModel& model, const NoiseSchedule& schedule);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lmd::diffusion
