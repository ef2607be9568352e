#pragma once

#include <array>
#include <string_view>

namespace jitgp::reference {

/// Dataset sizes (number of changes) per project.
struct ProjectSize {
  std::string_view name;
  int changes;
};

inline constexpr std::array<ProjectSize, 14> kProjects{{
    {"ActiveMQ", 10213}, {"Ant", 14387},   {"Camel", 38563},  {"Derby", 8268},   {"Geronimo", 13137},
    {"Hadoop", 16084},   {"HBase", 10509}, {"IVY", 2880},     {"JCR", 8651},     {"JMeter", 16341},
    {"LOG4J2", 10690},   {"LUCENE", 31240}, {"Mahout", 4115}, {"OpenJPA", 4893},
}};

/// Cross-repository reference means per setting and classifier.
struct ReferenceMeans {
  int setting;  // 0 = software-metric baseline
  std::string_view classifier;
  double precision, recall, f1, mcc, auc_pr;  // auc_pr < 0 when unknown
};

inline constexpr std::array<ReferenceMeans, 7> kReferenceMeans{{
    {1, "logreg", 0.6050, 0.6005, 0.5871, 0.3393, 0.8074},
    {1, "rf", 0.7359, 0.8241, 0.7724, 0.5316, 0.8022},
    {1, "gbdt", 0.7341, 0.8239, 0.7755, 0.5234, 0.7993},
    {2, "logreg", 0.6407, 0.7773, 0.6950, 0.3231, 0.8151},
    {2, "rf", 0.7343, 0.8237, 0.7714, 0.5215, 0.8015},
    {2, "gbdt", 0.7418, 0.8235, 0.7748, 0.5234, 0.8061},
    {0, "rf", 0.4673, 0.7644, 0.3083, 0.5141, -1.0},
}};

inline constexpr double kBaselineF1 = 0.3083;

inline constexpr const ReferenceMeans* means_for(int setting, std::string_view classifier) {
  for (const auto& m : kReferenceMeans)
    if (m.setting == setting && m.classifier == classifier) return &m;
  return nullptr;
}

}  // namespace jitgp::reference
