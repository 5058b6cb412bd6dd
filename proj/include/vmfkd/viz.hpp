#pragma once

#include <string>
#include <vector>

#include "vmfkd/activation_model.hpp"
#include "vmfkd/dataset.hpp"
#include "vmfkd/network.hpp"

namespace vmfkd {

// Exports the circular view of a d=2 penultimate space:
//   <prefix>_activations.csv  angle_rad,label per example
//   <prefix>_density.csv      class,angle_rad,density at 720 angles
//   <prefix>_polar.svg        optional composed polar plot
// Throws for penultimate dimensions other than 2.
void viz_export(const Network& net, const Dataset& ds,
                const ClassActivationModel& model, const std::string& prefix,
                bool svg = true);

// Per-class absolute angular gap (degrees) between the circular mean of the
// class's normalized activations and its prototype direction.
std::vector<double> class_angle_gaps_deg(const Network& net, const Dataset& ds);

}  // namespace vmfkd
