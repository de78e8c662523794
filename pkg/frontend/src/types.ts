// Wire types mirroring the session service JSON payloads. The client never
// derives any of these numbers itself; it renders what the server sent.

export interface StatisticRow {
  id: string;
  variable: string;
  kind: string;
  p: number | null;
  epsilon: number;
  held: boolean;
  error_value: number | null;
  error_units: string;
}

export interface SessionView {
  id: string;
  phase: "configuring" | "finalized";
  created_at: string;
  updated_at: string;
  dataset: {
    path: string;
    n: number;
    variables: string[];
    firewall_state: string;
    read_audit: number;
  };
  params: {
    epsilon: number;
    delta: number;
    population_size: number | null;
    internal_epsilon: number;
    internal_delta: number;
    usable_epsilon: number;
    epsilon_unspent: number;
    delta_reserved_for_analysts: number;
  };
  confidence_alpha: number;
  reserve_fraction: number;
  acknowledged_warnings: string[];
  statistics: StatisticRow[];
  releases_available: boolean;
  warnings?: string[];
}

export interface ReleaseRecord {
  statistic_id: string;
  kind: string;
  variable: string;
  n: number;
  epsilon_spent: number;
  alpha: number;
  error_bound: number;
  error_units: string;
  value: unknown;
  p: number | null;
  released_at: string;
  engine_version: string;
}

export interface ReleaseDocument {
  format: string;
  session_id: string;
  budget: {
    global_epsilon: number;
    global_delta: number;
    population_size: number | null;
    internal_epsilon: number;
    internal_delta: number;
    reserve_fraction: number;
    usable_epsilon: number;
    epsilon_spent: number;
    epsilon_unspent: number;
    delta_reserved_for_analysts: number;
  };
  confidence_alpha: number;
  releases: ReleaseRecord[];
}

export interface TierInfo {
  tier: number;
  description: string;
  epsilon: number | null;
  delta: number | null;
  supported: boolean;
}

export interface ParamsRequest {
  epsilon?: number;
  delta?: number;
  population_size?: number;
  acknowledge_warnings?: boolean;
}

export interface CreateSessionRequest {
  dataset_path: string;
  epsilon: number;
  delta: number;
  population_size?: number;
  acknowledge_warnings?: boolean;
}

export interface AddStatisticRequest {
  variable: string;
  kind: string;
  metadata: {
    kind: string;
    lower?: number | null;
    upper?: number | null;
    categories?: string[] | null;
    grid_cells?: number | null;
  };
  p?: number | null;
}
