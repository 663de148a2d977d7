#pragma once

#include "flexstep/machine.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <variant>
#include <vector>

namespace flexstep
{
    // Core-management instruction set: G.* (any core), M.* (main cores only),
    // C.* (checker cores only).

    struct IllegalInstruction : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    enum class CoreAttr : std::uint8_t
    {
        Main,
        Checker,
        Compute,
    };

    enum class Checking : std::uint8_t
    {
        Disabled, // main: not forwarding
        Enabled,  // main: forwarding segments to its associated checkers
        Idle,     // checker: not consuming
        Busy,     // checker: running the checker thread
    };

    struct CoreState
    {
        CoreAttr attr = CoreAttr::Compute;
        std::vector<int> associated; // main: its checkers; checker: its feeding main
        Checking checking = Checking::Disabled;
        std::optional<RegCheckpoint> ass_saved; // checker context parked by C.record
        std::optional<RegCheckpoint> applied;   // last SCP installed by C.apply
        std::optional<bool> last_verdict;       // reported through C.result
    };

    namespace isa
    {
        struct IdsContain { int core; };
        struct Configure { std::set<int> mains; std::set<int> checkers; };
        struct Associate { int main; std::vector<int> checkers; };
        struct Check { int main; bool enable; };
        struct CheckState { int checker; bool busy; };
        struct Record { int checker; RegCheckpoint context; };
        struct Apply { int checker; RegCheckpoint scp; };
        struct Jal { int checker; };
        struct Result { int checker; };
    } // namespace isa

    using IsaOp = std::variant<isa::IdsContain, isa::Configure, isa::Associate, isa::Check, isa::CheckState,
                               isa::Record, isa::Apply, isa::Jal, isa::Result>;

    // IdsContain -> CoreAttr, Jal -> target npc, Result -> verdict, others -> monostate.
    using IsaResult = std::variant<std::monostate, CoreAttr, std::uint64_t, bool>;

    class Platform
    {
    public:
        explicit Platform(int core_count);

        int core_count() const noexcept { return static_cast<int>(cores_.size()); }
        const CoreState& core(int id) const;

        CoreAttr ids_contain(int core) const;
        void configure(const std::set<int>& mains, const std::set<int>& checkers);
        void associate(int main, const std::vector<int>& checkers);
        void check(int main, bool enable);
        void check_state(int checker, bool busy);
        void record(int checker, const RegCheckpoint& context);
        void apply(int checker, const RegCheckpoint& scp);
        std::uint64_t jal(int checker);
        bool result(int checker) const;

        // Written by the checker pipeline at each ECP compare.
        void report_verdict(int checker, bool pass);

    private:
        CoreState& mut(int id);
        CoreState& require(int id, CoreAttr attr, const char* op);

        std::vector<CoreState> cores_;
    };

    IsaResult isa_step(Platform& platform, const IsaOp& op);
} // namespace flexstep
