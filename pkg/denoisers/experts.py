"""
Mezcla de expertos con expertos compartidos y privados por comportamiento.
El comportamiento objetivo actúa como enrutador duro de los expertos privados;
el comportamiento nulo solo usa los compartidos.
"""

from typing import Optional

import torch
from torch import nn


class Expert(nn.Module):
    def __init__(self, d: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(d, hidden),
            nn.GELU(),
            nn.Linear(hidden, d),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


def gate(x: torch.Tensor, weight: torch.Tensor, num_shared: Optional[int] = None) -> torch.Tensor:
    """
    w(x) = softmax(W_g x).

    Args:
        x: Entradas (..., d)
        weight: W_g de forma (m_s + m_p, d)
        num_shared: Si se indica, renormaliza solo sobre los primeros m_s logits

    Returns:
        torch.Tensor: Pesos (..., m_s + m_p) o (..., m_s)
    """
    logits = x @ weight.T
    if num_shared is not None:
        logits = logits[..., :num_shared]
    return torch.softmax(logits, dim=-1)


class BehaviorMoE(nn.Module):
    def __init__(self, d: int, hidden: int, num_behaviors: int, m_s: int, m_p: int):
        super().__init__()
        self.num_behaviors = num_behaviors
        self.m_s = m_s
        self.m_p = m_p
        self.shared_experts = nn.ModuleList([Expert(d, hidden) for _ in range(m_s)])
        self.private_experts = nn.ModuleList([
            nn.ModuleList([Expert(d, hidden) for _ in range(m_p)]) for _ in range(num_behaviors)
        ])
        self.gate = nn.Linear(d, m_s + m_p, bias=False)

    def forward(self, x: torch.Tensor, behavior: torch.Tensor) -> torch.Tensor:
        """
        Args:
            x: (N, d)
            behavior: (N,) ids reales o el id nulo (= num_behaviors)

        Returns:
            torch.Tensor: (N, d)
        """
        shared = torch.stack([expert(x) for expert in self.shared_experts], dim=1)
        output = x.new_zeros(x.shape)

        null_rows = behavior == self.num_behaviors
        if bool(null_rows.any()):
            weights = gate(x[null_rows], self.gate.weight, self.m_s)
            output[null_rows] = (weights.unsqueeze(-1) * shared[null_rows]).sum(dim=1)

        for b in range(self.num_behaviors):
            rows = behavior == b
            if not bool(rows.any()):
                continue
            x_b = x[rows]
            candidates = [shared[rows]]
            if self.m_p:
                candidates.append(torch.stack([expert(x_b) for expert in self.private_experts[b]], dim=1))
            stacked = torch.cat(candidates, dim=1)
            weights = gate(x_b, self.gate.weight)
            output[rows] = (weights.unsqueeze(-1) * stacked).sum(dim=1)
        return output
