"""experiment runs table

Revision ID: 0001
Revises:
Create Date: 2026-10-17
"""
from alembic import op
import sqlalchemy as sa

revision = "0001"
down_revision = None
branch_labels = None
depends_on = None


def upgrade() -> None:
    op.create_table(
        "experiment_runs",
        sa.Column("id", sa.Integer(), primary_key=True),
        sa.Column("batch_id", sa.String(length=64), nullable=False),
        sa.Column("family", sa.String(length=16), nullable=False),
        sa.Column("n", sa.Integer(), nullable=False),
        sa.Column("density", sa.Float(), nullable=False),
        sa.Column("domain", sa.Integer(), nullable=False),
        sa.Column("tightness", sa.Float(), nullable=True),
        sa.Column("kp", sa.String(length=8), nullable=False),
        sa.Column("ke", sa.String(length=8), nullable=False),
        sa.Column("instance", sa.Integer(), nullable=False),
        sa.Column("seed", sa.BigInteger(), nullable=False),
        sa.Column("cost", sa.Float(), nullable=False),
        sa.Column("oracle_cost", sa.Float(), nullable=True),
        sa.Column("nclo", sa.Integer(), nullable=False),
        sa.Column("network_load", sa.Integer(), nullable=False),
        sa.Column("message_count", sa.Integer(), nullable=False),
        sa.Column("max_dims", sa.Integer(), nullable=False),
        sa.Column("privacy_loss", sa.Float(), nullable=False),
        sa.Column("wall_ms", sa.Float(), nullable=True),
        sa.Column("created_at", sa.DateTime(), nullable=True),
    )
    op.create_index("ix_experiment_runs_id", "experiment_runs", ["id"])
    op.create_index("idx_experiment_runs_batch_id", "experiment_runs", ["batch_id"])


def downgrade() -> None:
    op.drop_index("idx_experiment_runs_batch_id", table_name="experiment_runs")
    op.drop_index("ix_experiment_runs_id", table_name="experiment_runs")
    op.drop_table("experiment_runs")
