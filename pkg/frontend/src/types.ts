// Server document shapes (mirrors the debug-service JSON API).

export interface AgentDoc {
  id: string;
  x: number;
  y: number;
  yaw: number;
  speed: number;
  length: number;
  width: number;
  role: string;
  static: boolean;
}

export interface WorldDoc {
  sim_time: number;
  tick: number;
  ego: AgentDoc;
  agents: AgentDoc[];
  light_colors: Record<string, number>; // 0 red, 1 yellow, 2 green
  weather_tag: string;
}

export interface PromptDoc {
  routing_points: number[][];
  target_point: number[];
  command: number;
  current_speed: number;
  prev_speeds: number[];
  traffic_lights: number[][];
  light_ids: string[];
  presence: Record<string, number>;
  ego_pose: number[];
  tick: number;
}

export interface Snapshot {
  session_id: string;
  tick: number;
  planner_tick: number;
  sim_time: number;
  terminated: string | null;
  world: WorldDoc;
  metrics: { rc: number; is_score: number; ds: number };
  routing: number[][];
  target_points: number[][];
  interventions: InterventionDoc[];
  prompt?: PromptDoc;
  prediction?: number[][] | null;
  control?: { steer: number; throttle: number; brake: number } | null;
  events?: { kind: string; tick: number }[];
  attribution?: {
    token_gradients: TokenGradientsDoc;
    head_response: HeadResponseDoc;
  };
}

export interface TokenGradientsDoc {
  tick: number;
  g_x: Record<string, number>;
  g_y: Record<string, number>;
}

export interface HeadResponseDoc {
  tick: number;
  components: string[];
  response: number[][]; // heads x components
  avg?: Record<string, number>;
}

export interface ActivationMapDoc {
  tick: number;
  layer: string;
  values: number[][];
  upsampled: number[][] | null;
  extent: [number, number, number, number] | null; // ego-frame x/y bounds
}

export interface InterventionDoc {
  kind: string;
  component?: string;
  light_id?: string;
  color?: number;
  target?: number[];
  routing?: number[][];
  speed?: number;
  sigma?: number;
  prob?: number;
  block?: number;
  command?: number;
  seed?: number;
}
