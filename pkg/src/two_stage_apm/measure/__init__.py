from .distributions import CellStats, DiscreteAtoms, UniformBox, XiDistribution, cell_stats, sample, total_mean
