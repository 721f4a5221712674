import bpy
import mathutils
from numpy.random import uniform, normal, randint
from infinigen.core.nodes.node_wrangler import Nodes, NodeWrangler
from infinigen.core.nodes import node_utils
from infinigen.core.util.color import color_category
from infinigen.core import surface

def geometry_nodes(nw: NodeWrangler):
    group_input = nw.new_node(Nodes.GroupInput,
        expose_input=[('NodeSocketGeometry', 'Geometry', None),
            ('NodeSocketFloat', 'table_width', 2.0),
            ('NodeSocketFloat', 'table_length', 2.0),
            ('NodeSocketFloat', 'leg_height', 2.0),
            ('NodeSocketFloat', 'leg_radius', 1.0)])
    nw.node_group.interface.items_tree['table_width'].min_value = 0.6
    nw.node_group.interface.items_tree['table_width'].max_value = 6.0
    nw.node_group.interface.items_tree['table_length'].min_value = 0.6
    nw.node_group.interface.items_tree['table_length'].max_value = 6.0
    nw.node_group.interface.items_tree['leg_height'].min_value = 0.1
    nw.node_group.interface.items_tree['leg_height'].max_value = 6.0
    nw.node_group.interface.items_tree['leg_radius'].min_value = 0.01
    nw.node_group.interface.items_tree['leg_radius'].max_value = 2.0

    inset_w = nw.new_node(Nodes.Math, input_kwargs={0: group_input.outputs['table_width'], 1: 0.5}, attrs={'operation': 'SUBTRACT'})

    inset_l = nw.new_node(Nodes.Math, input_kwargs={0: group_input.outputs['table_length'], 1: 0.5}, attrs={'operation': 'SUBTRACT'})

    corners = nw.new_node(Nodes.Quadrilateral, input_kwargs={'Width': inset_w, 'Height': inset_l})

    leg = nw.new_node(Nodes.Cylinder, input_kwargs={'Radius': group_input.outputs['leg_radius'], 'Depth': group_input.outputs['leg_height']})

    legs = nw.new_node(Nodes.InstanceOnPoints, input_kwargs={'Points': corners, 'Instance': leg.outputs['Mesh']})

    drop = nw.new_node(Nodes.Math, input_kwargs={0: group_input.outputs['leg_height'], 1: -2.0}, attrs={'operation': 'DIVIDE'})

    offset = nw.new_node(Nodes.CombineXYZ, input_kwargs={'X': 0.0, 'Y': 0.0, 'Z': drop})

    legs_placed = nw.new_node(Nodes.Transform, input_kwargs={'Geometry': legs, 'Translation': offset})

    outline = nw.new_node(Nodes.Quadrilateral, input_kwargs={'Width': group_input.outputs['table_width'], 'Height': group_input.outputs['table_length']})

    rounded = nw.new_node(Nodes.FilletCurve, input_kwargs={'Curve': outline, 'Count': 20, 'Radius': 0.25}, attrs={'mode': 'POLY'})

    top_face = nw.new_node(Nodes.FillCurve, input_kwargs={'Curve': rounded}, attrs={'mode': 'NGONS'})

    top = nw.new_node(Nodes.ExtrudeMesh, input_kwargs={'Mesh': top_face, 'Offset Scale': 1.0})

    table = nw.new_node(Nodes.JoinGeometry, input_kwargs={'Geometry': [legs_placed, top.outputs['Mesh']]})

    group_output = nw.new_node(Nodes.GroupOutput, input_kwargs={'Geometry': table}, attrs={'is_active_output': True})

def apply(obj, selection=None, **kwargs):
    surface.add_geomod(obj, geometry_nodes, selection=selection, attributes=[])
