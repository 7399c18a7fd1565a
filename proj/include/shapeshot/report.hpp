#pragma once

// Text, CSV and SVG renderings of evaluation results. Numbers are written in
// the shortest form that parses back to the same double.

#include <string>
#include <vector>

#include "shapeshot/harness.hpp"

namespace shapeshot {

std::string format_number(double value);

// header "mean,ci95"
std::string eval_csv(const EvalReport& report);
std::string eval_text(const EvalReport& report);

// header "source,p,support_tta,query_tta,mean,ci95,n_tasks"
std::string ablation_csv(const std::vector<AblationCell>& cells);
std::string ablation_text(const std::vector<AblationCell>& cells);

// header "p,mean,ci95,n_tasks"
std::string sweep_csv(const std::vector<SweepPoint>& points);
std::string sweep_text(const std::vector<SweepPoint>& points);

struct CurvePoint {
    double p = 0.0;
    double mean = 0.0;
    double ci95 = 0.0;
    std::size_t n_tasks = 0;
};

std::vector<CurvePoint> curve_of(const std::vector<SweepPoint>& points);
// Throws FormatError on a wrong header or malformed row.
std::vector<CurvePoint> parse_sweep_csv(const std::string& text);

// Mean accuracy versus p with a shaded ci95 band.
std::string sweep_svg(const std::vector<CurvePoint>& curve);

// header "step,loss,lr,source" and "step,accuracy"
std::string train_log_csv(const TrainResult& result);
std::string validation_csv(const TrainResult& result);

}  // namespace shapeshot
