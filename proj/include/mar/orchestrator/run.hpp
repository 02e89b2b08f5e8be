#pragma once

#include "mar/agents/provider.hpp"
#include "mar/env/backend.hpp"
#include "mar/kb/trace.hpp"
#include "mar/orchestrator/trajectory.hpp"
#include "mar/retrieval/kb_io.hpp"

#include <filesystem>

namespace mar::orch {

struct RunContext {
    env::DeviceBackend& device;
    agents::ModelProvider& provider;
    const retrieval::KnowledgeBase& kb;
    RunConfig config;
    kb::TraceLogger* trace = nullptr;
    // Step screenshots are written under <out_dir>/screenshots when set.
    std::filesystem::path out_dir;
};

// Runs the perceive/manage/operate/perceive/reflect/note loop until the Manager
// answers DONE, the step budget is spent, the repetition cap is hit, or the
// provider fails for good. Persists trajectory.json when out_dir is set.
Trajectory run_task(const TaskInstruction& task, RunContext& ctx);

}  // namespace mar::orch
