#pragma once

#include "flexstep/rng.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace flexstep
{
    // Tiny deterministic machine used by the checker-flow model: 32 registers
    // (r0 reads as zero), flat word-addressed memory, one instruction per cycle.
    // Branches are forward-only, so every program terminates.

    inline constexpr int kRegCount = 32;
    inline constexpr std::size_t kDefaultMemWords = 4096;

    enum class OpKind : std::uint8_t
    {
        Alu,
        Load,
        Store,
        Branch,
        PrivSwitch,
        Amo,
    };

    enum class AluOp : std::uint8_t
    {
        Add,
        Sub,
        Xor,
        Mul,
        Shl,
        LoadImm,
    };

    std::string_view to_string(OpKind k) noexcept;

    // Alu:    rd = op(rs1, rs2 | imm)
    // Load:   rd = mem[rs1 + imm]
    // Store:  mem[rs1 + imm] = rs2
    // Branch: if rs1 < rs2 then skip imm instructions
    // Amo:    rd = mem[a]; mem[a] = mem[a] + rs2, a = rs1 + imm
    struct Instruction
    {
        OpKind kind = OpKind::Alu;
        AluOp alu = AluOp::Add;
        std::uint8_t rd = 0;
        std::uint8_t rs1 = 0;
        std::uint8_t rs2 = 0;
        std::int64_t imm = 0;
    };

    struct MachineFault : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    // pc: address of the most recently retired instruction (0 at reset);
    // npc: address of the next instruction to execute.
    struct RegCheckpoint
    {
        std::uint64_t pc = 0;
        std::array<std::uint64_t, kRegCount> regs{};
        std::uint64_t npc = 0;

        static constexpr int kWords = kRegCount + 2;

        // Channel word layout: 0 = pc, 1 = npc, 2.. = registers.
        std::uint64_t word(int i) const;
        void set_word(int i, std::uint64_t v);

        friend bool operator==(const RegCheckpoint&, const RegCheckpoint&) = default;
    };

    enum class AccessKind : std::uint8_t
    {
        Load,
        Store,
        AmoLoad,
        AmoStore,
    };

    struct MemAccess
    {
        AccessKind kind = AccessKind::Load;
        std::uint64_t addr = 0;
        std::uint64_t data = 0;
    };

    struct StepInfo
    {
        OpKind kind = OpKind::Alu;
        std::array<MemAccess, 2> accesses{};
        int access_count = 0;
    };

    std::uint64_t alu_eval(AluOp op, std::uint64_t a, std::uint64_t b, std::int64_t imm) noexcept;
    std::vector<std::uint64_t> initial_memory(std::size_t mem_words);

    class Machine
    {
    public:
        Machine(std::span<const Instruction> program, std::size_t mem_words = kDefaultMemWords);

        bool done() const noexcept { return state_.npc >= program_.size(); }
        const Instruction& next_instruction() const { return program_[state_.npc]; }

        // Executes the instruction at npc. Throws MachineFault on an
        // out-of-range memory access.
        StepInfo step();

        const RegCheckpoint& state() const noexcept { return state_; }
        const std::vector<std::uint64_t>& memory() const noexcept { return mem_; }

    private:
        std::uint64_t address(const Instruction& ins) const;

        std::span<const Instruction> program_;
        std::vector<std::uint64_t> mem_;
        RegCheckpoint state_;
    };

    struct ProgramMix
    {
        double alu = 0.55;
        double load = 0.17;
        double store = 0.15;
        double branch = 0.06;
        double amo = 0.03;
        double priv = 0.04;
        std::size_t mem_words = kDefaultMemWords;
    };

    // Random terminating program; all memory operands are in range.
    std::vector<Instruction> random_program(Rng& rng, std::size_t length, const ProgramMix& mix = {});
} // namespace flexstep
