#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cssi/eval.hpp"
#include "cssi/ncd.hpp"

namespace cssi {

/// threshold,fpr,tpr per point, 17 significant digits.
std::string roc_to_csv(const RocCurve& curve);
/// Inverse of roc_to_csv; the AUC is recomputed from the points.
RocCurve roc_from_csv(const std::string& text);

/// ix,iy,x,y,label per cell.
std::string grid_to_csv(const BoundaryGrid& grid);

/// epoch,train_nll,val_nll,temperature,mean_pi_1..mean_pi_d.
std::string history_to_csv(const TrainingHistory& history);

/// ROC curves as polylines in a fixed 800x600 view box.
std::string roc_to_svg(const std::vector<std::pair<std::string, RocCurve>>& curves, const std::string& title);

/// One rect per grid cell coloured by label, 800x600 view box.
std::string grid_to_svg(const BoundaryGrid& grid, const std::string& title);

/// write_text_file under a name that says what failed. Throws IoError.
void emit(const std::filesystem::path& path, const std::string& content);

}  // namespace cssi
